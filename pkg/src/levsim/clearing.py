"""Market clearing: fund demand curves and the per-step price solve.

The clearing price equates noise-trader demand ``xi / p`` plus the fund
managers' demand to the fixed share supply.  Fund demand is a continuous
piecewise-linear function of the mispricing ``m = V - p``, kinked where
the leverage cap binds, so the root is found by bracketed bisection
(derivative free, guaranteed once a sign change is bracketed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._jit import njit
from .states import FundState

#: Relative width of the final price bracket.
DEFAULT_PRICE_TOL = 1e-12
#: Residual tolerance expressed as a fraction of total supply.
RESIDUAL_FRACTION = 1e-8
#: Initial bracket is [p_prev / BRACKET_FACTOR, p_prev * BRACKET_FACTOR].
BRACKET_FACTOR = 50.0
MAX_BRACKET_EXPANSIONS = 10


class ClearingFailure(RuntimeError):
    """No sign change in excess demand after all bracket expansions.

    Signals a degenerate configuration; carries enough context to
    reconstruct the failing problem.
    """

    def __init__(self, message: str, *, bracket=None, xi=None, lambda_adapt=None):
        super().__init__(message)
        self.bracket = bracket
        self.xi = xi
        self.lambda_adapt = lambda_adapt


@njit(cache=True)
def demand_fraction(m, beta, lam, short_selling):
    """Desired position value as a fraction of wealth at mispricing m.

    The linear response ``beta * m`` is clipped at ``lam`` on the long
    side and at ``1 - lam`` on the short side; the kink locations follow
    from continuity.  Short selling requires a cap strictly above one,
    so at ``lam == 1`` the long-only form applies even when shorting is
    enabled.
    """
    if short_selling and lam > 1.0:
        if m <= (1.0 - lam) / beta:
            return 1.0 - lam
        if m > lam / beta:
            return lam
        return beta * m
    if m < 0.0:
        return 0.0
    if m > lam / beta:
        return lam
    return beta * m


@njit(cache=True)
def fund_demand_shares(shares_prev, cash_prev, beta, p, fundamental, lam, short_selling):
    """Shares demanded at candidate price p, wealth marked to p.

    A fund whose marked wealth is not positive demands nothing (it is
    liquidated within the clearing and shut down afterwards).
    """
    w = shares_prev * p + cash_prev
    if w <= 0.0:
        return 0.0
    return demand_fraction(fundamental - p, beta, lam, short_selling) * w / p


@njit(cache=True)
def excess_demand_shares(p, xi, shares, cash, betas, alive, lam, short_selling,
                         fundamental, supply):
    total = xi / p - supply
    for h in range(betas.shape[0]):
        if alive[h] != 0:
            total += fund_demand_shares(
                shares[h], cash[h], betas[h], p, fundamental, lam, short_selling
            )
    return total


@njit(cache=True)
def clear_price_core(xi, shares, cash, betas, alive, lam, short_selling,
                     fundamental, supply, p_lo, p_hi, rel_tol, resid_tol,
                     max_expansions):
    """Bisection on the excess demand.  Returns (price, residual, ok)."""
    lo = p_lo
    hi = p_hi
    f_lo = excess_demand_shares(lo, xi, shares, cash, betas, alive, lam,
                                short_selling, fundamental, supply)
    f_hi = excess_demand_shares(hi, xi, shares, cash, betas, alive, lam,
                                short_selling, fundamental, supply)
    expansions = 0
    while f_lo * f_hi > 0.0 and expansions < max_expansions:
        lo /= BRACKET_FACTOR
        hi *= BRACKET_FACTOR
        f_lo = excess_demand_shares(lo, xi, shares, cash, betas, alive, lam,
                                    short_selling, fundamental, supply)
        f_hi = excess_demand_shares(hi, xi, shares, cash, betas, alive, lam,
                                    short_selling, fundamental, supply)
        expansions += 1
    if f_lo == 0.0:
        return lo, 0.0, 1
    if f_hi == 0.0:
        return hi, 0.0, 1
    if f_lo * f_hi > 0.0:
        return -1.0, abs(f_lo) if abs(f_lo) < abs(f_hi) else abs(f_hi), 0

    mid = 0.5 * (lo + hi)
    f_mid = f_lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = excess_demand_shares(mid, xi, shares, cash, betas, alive, lam,
                                     short_selling, fundamental, supply)
        if f_lo * f_mid <= 0.0:
            hi = mid
            f_hi = f_mid
        else:
            lo = mid
            f_lo = f_mid
        if (hi - lo) <= rel_tol * mid and abs(f_mid) <= resid_tol:
            return mid, abs(f_mid), 1
        if (hi - lo) <= 4e-16 * mid:
            break  # at the floating-point floor; accept what we have
    return mid, abs(f_mid), 1 if abs(f_mid) <= resid_tol else 0


@dataclass
class ClearingProblem:
    """One clearing instance: the noise demand, a view of the active
    funds, the current leverage cap, and solver settings."""

    xi: float
    funds: Sequence[FundState]
    lambda_adapt: float
    supply: float
    short_selling: bool
    fundamental: float = 1.0
    bracket: tuple = (0.0, 0.0)  # (0, 0) means derive from price_prev
    price_prev: float = 1.0
    tol: float = DEFAULT_PRICE_TOL
    max_expansions: int = MAX_BRACKET_EXPANSIONS

    def __post_init__(self):
        if self.xi <= 0.0:
            raise ValueError(f"xi must be positive, got {self.xi}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        lo, hi = self.bracket
        if lo == 0.0 and hi == 0.0:
            self.bracket = (self.price_prev / BRACKET_FACTOR,
                            self.price_prev * BRACKET_FACTOR)
        elif not lo < hi:
            raise ValueError(f"bracket must satisfy lo < hi, got {self.bracket}")

    def _arrays(self):
        active = [f for f in self.funds if f.is_active]
        shares = np.array([f.shares for f in active], dtype=np.float64)
        cash = np.array([f.cash for f in active], dtype=np.float64)
        betas = np.array([f.beta for f in active], dtype=np.float64)
        alive = np.ones(len(active), dtype=np.uint8)
        return shares, cash, betas, alive


def fund_demand(fund: FundState, price: float, lambda_adapt: float,
                short_selling: bool, fundamental: float = 1.0) -> float:
    """Shares demanded by one fund at the given price."""
    if price <= 0.0:
        raise ValueError(f"price must be positive, got {price}")
    if not fund.is_active:
        return 0.0
    return float(fund_demand_shares(fund.shares, fund.cash, fund.beta, price,
                                    fundamental, lambda_adapt, short_selling))


def aggregate_excess_demand(problem: ClearingProblem, price: float) -> float:
    """Noise plus fund demand minus supply, in shares."""
    shares, cash, betas, alive = problem._arrays()
    return float(excess_demand_shares(
        price, problem.xi, shares, cash, betas, alive, problem.lambda_adapt,
        problem.short_selling, problem.fundamental, problem.supply,
    ))


def clear_price(problem: ClearingProblem) -> float:
    """Solve the clearing condition for the price.

    Raises ClearingFailure when no sign change is found after the
    maximum number of geometric bracket expansions.
    """
    shares, cash, betas, alive = problem._arrays()
    lo, hi = problem.bracket
    price, residual, ok = clear_price_core(
        problem.xi, shares, cash, betas, alive, problem.lambda_adapt,
        problem.short_selling, problem.fundamental, problem.supply,
        lo, hi, problem.tol, RESIDUAL_FRACTION * problem.supply,
        problem.max_expansions,
    )
    if not ok:
        raise ClearingFailure(
            "no clearing price: excess demand has no bracketed sign change "
            f"(xi={problem.xi:.6g}, lambda_adapt={problem.lambda_adapt:.6g}, "
            f"bracket={problem.bracket}, residual={residual:.6g})",
            bracket=problem.bracket, xi=problem.xi,
            lambda_adapt=problem.lambda_adapt,
        )
    return float(price)
