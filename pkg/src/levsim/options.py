"""Perfect-hedge regulation: option strikes, premiums, and the implied cap.

Under this policy every leveraged position must carry a one-step option
(a put for longs, a call for shorts) struck so that liquidating at the
strike exactly repays the loan.  The fund pays the premium, priced by
Black-Scholes at zero rate with volatility ``theta * sigma(t)``.  A
ceiling on the per-share hedging cost, anchored at the benchmark
volatility, implies a volatility-adaptive leverage cap: the premium
grows with leverage through the strike, so the cap is found by a
one-dimensional solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._jit import njit
from .params import SimParams
from .states import FundState

#: Premium residual tolerance for the cap solve, as a fraction of spot.
CAP_SOLVE_TOL = 1e-10
#: Upper end of the bisection bracket, as a multiple of lambda_max.
CAP_BRACKET_MULT = 1e3

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class HedgeParams:
    """Configuration of the perfect-hedge policy.

    The hedging-cost ceiling is the premium of the cap-strike option
    priced at the benchmark volatility, so the adaptive cap equals
    ``lambda_max`` exactly when volatility sits at the benchmark.
    """

    theta: float
    sigma_b: float
    lambda_max: float
    t_opt: float = 1.0
    rate: float = 0.0

    def __post_init__(self):
        if self.theta <= 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if self.t_opt <= 0.0:
            raise ValueError(f"t_opt must be positive, got {self.t_opt}")

    @classmethod
    def from_sim(cls, params: SimParams) -> "HedgeParams":
        return cls(theta=params.theta, sigma_b=params.sigma_b,
                   lambda_max=params.lambda_max)


@njit(cache=True)
def norm_cdf(x):
    return 0.5 * math.erfc(-x / SQRT2)


@njit(cache=True)
def bs_put_core(spot, strike, sigma, t_opt):
    """Black-Scholes put at zero rate; intrinsic value in the
    deterministic sigma -> 0 limit."""
    if strike <= 0.0:
        return 0.0
    if sigma <= 0.0 or t_opt <= 0.0:
        v = strike - spot
        return v if v > 0.0 else 0.0
    srt = sigma * math.sqrt(t_opt)
    d1 = (math.log(spot / strike) + 0.5 * sigma * sigma * t_opt) / srt
    d2 = d1 - srt
    v = strike * norm_cdf(-d2) - spot * norm_cdf(-d1)
    return v if v > 0.0 else 0.0


@njit(cache=True)
def bs_call_core(spot, strike, sigma, t_opt):
    """Black-Scholes call at zero rate; intrinsic value when sigma == 0."""
    if strike <= 0.0:
        return spot
    if sigma <= 0.0 or t_opt <= 0.0:
        v = spot - strike
        return v if v > 0.0 else 0.0
    srt = sigma * math.sqrt(t_opt)
    d1 = (math.log(spot / strike) + 0.5 * sigma * sigma * t_opt) / srt
    d2 = d1 - srt
    v = spot * norm_cdf(d1) - strike * norm_cdf(d2)
    return v if v > 0.0 else 0.0


def bs_price(kind: str, spot: float, strike: float, sigma_eff: float,
             t_opt: float = 1.0) -> float:
    """Zero-rate Black-Scholes price of a put or call."""
    if spot <= 0.0:
        raise ValueError(f"spot must be positive, got {spot}")
    if strike < 0.0:
        raise ValueError(f"strike must be >= 0, got {strike}")
    if sigma_eff < 0.0:
        raise ValueError(f"sigma_eff must be >= 0, got {sigma_eff}")
    if kind == "put":
        return float(bs_put_core(spot, strike, sigma_eff, t_opt))
    if kind == "call":
        return float(bs_call_core(spot, strike, sigma_eff, t_opt))
    raise ValueError(f"kind must be 'put' or 'call', got {kind!r}")


def put_strike(price: float, leverage: float) -> float:
    """Strike guaranteeing loan repayment for a long position: the price
    may fall by the margin fraction 1/leverage before collateral no
    longer covers the loan."""
    if price <= 0.0:
        raise ValueError(f"price must be positive, got {price}")
    if leverage < 1.0:
        raise ValueError(f"put strike needs leverage >= 1, got {leverage}")
    return price * (1.0 - 1.0 / leverage)


def call_strike(price: float, leverage: float) -> float:
    """Strike guaranteeing repayment for a short position; shorts only
    exist at leverage strictly above one."""
    if price <= 0.0:
        raise ValueError(f"price must be positive, got {price}")
    if leverage <= 1.0:
        raise ValueError(f"call strike needs leverage > 1, got {leverage}")
    return price * (1.0 + 1.0 / (leverage - 1.0))


def hedge_strikes(price: float, leverage: float) -> tuple:
    """(K_put, K_call) for the given realized leverage; the call strike
    is None at leverage <= 1 where no short position can exist."""
    k_put = put_strike(price, leverage)
    k_call = call_strike(price, leverage) if leverage > 1.0 else None
    return k_put, k_call


@njit(cache=True)
def position_premium(shares, wealth, price, sigma_eff):
    """Premium per share of the option hedging the position just taken.

    Longs at leverage <= 1 carry no loan and hedge for free; shorts are
    always levered above one by the balance-sheet definition.
    """
    if shares > 0.0:
        lam = shares * price / wealth
        if lam <= 1.0:
            return 0.0
        return bs_put_core(price, price * (1.0 - 1.0 / lam), sigma_eff, 1.0)
    if shares < 0.0:
        lam = (wealth - shares * price) / wealth
        return bs_call_core(price, price * (1.0 + 1.0 / (lam - 1.0)), sigma_eff, 1.0)
    return 0.0


@njit(cache=True)
def hedge_cost_term(shares_prev, premium_prev):
    """Wealth increment from option costs on the position entered last
    step; non-positive for both longs and shorts."""
    return -abs(shares_prev) * premium_prev


def hedge_cost(fund: FundState, price: float, sigma: float, theta: float) -> float:
    """Cost term charged next step for the position the fund holds now,
    pricing the hedge at entry (current price, current volatility)."""
    if not fund.is_active or fund.shares == 0.0 or fund.wealth <= 0.0:
        return 0.0
    prem = position_premium(fund.shares, fund.wealth, price, theta * sigma)
    return float(hedge_cost_term(fund.shares, prem))


def effective_spread(fund: FundState, price: float, premium: float) -> float:
    """Hedging premium expressed as a per-step interest rate on the loan.

    Longs divide the premium by the loan per share; at leverage <= 1
    there is no loan and the spread is undefined (NaN, excluded from
    averages).  Shorts divide by the price.
    """
    if fund.shares < 0.0:
        return premium / price
    if fund.shares > 0.0 and fund.wealth > 0.0:
        lam = fund.shares * price / fund.wealth
        if lam > 1.0:
            return premium / (price * (1.0 - 1.0 / lam))
    return math.nan


@njit(cache=True)
def _cap_premium(spot, lam, sigma_eff, use_put):
    if use_put:
        return bs_put_core(spot, spot * (1.0 - 1.0 / lam), sigma_eff, 1.0)
    if lam <= 1.0 + 1e-15:
        return 0.0  # call strike diverges; a vanishing short hedges for free
    return bs_call_core(spot, spot * (1.0 + 1.0 / (lam - 1.0)), sigma_eff, 1.0)


@njit(cache=True)
def solve_lambda_cap(spot, sigma_eff, target_premium, lambda_max, use_put):
    """Leverage at which the hedge premium reaches the ceiling.

    The premium is strictly increasing in leverage through the strike,
    so bisection on [1, lambda_max * 1e3] brackets the solution; if even
    the upper end prices below the ceiling the cap cannot bind and
    lambda_max is returned.
    """
    lam_hi = lambda_max * CAP_BRACKET_MULT
    if _cap_premium(spot, lam_hi, sigma_eff, use_put) <= target_premium:
        return lambda_max
    lam_lo = 1.0
    mid = lambda_max
    for _ in range(200):
        mid = 0.5 * (lam_lo + lam_hi)
        prem = _cap_premium(spot, mid, sigma_eff, use_put)
        if abs(prem - target_premium) <= CAP_SOLVE_TOL * spot:
            return mid
        if prem > target_premium:
            lam_hi = mid
        else:
            lam_lo = mid
    return mid


@njit(cache=True)
def hedge_lambda_adapt(spot, sigma, sigma_b, theta, lambda_max, short_selling):
    """Binding adaptive cap under the perfect-hedge policy.

    Long and short ceilings are solved separately (puts and calls) and
    the binding cap is their minimum with the static cap.  The premium
    is homogeneous in spot, so the result does not depend on it.
    """
    if sigma <= sigma_b:
        return lambda_max
    target_put = bs_put_core(spot, spot * (1.0 - 1.0 / lambda_max),
                             theta * sigma_b, 1.0)
    lam = solve_lambda_cap(spot, theta * sigma, target_put, lambda_max, True)
    if short_selling and lambda_max > 1.0:
        target_call = bs_call_core(
            spot, spot * (1.0 + 1.0 / (lambda_max - 1.0)), theta * sigma_b, 1.0)
        lam_short = solve_lambda_cap(spot, theta * sigma, target_call,
                                     lambda_max, False)
        if lam_short < lam:
            lam = lam_short
    if lam > lambda_max:
        lam = lambda_max
    if lam < 1.0:
        lam = 1.0
    return lam


def premium_cap(price: float, params: HedgeParams) -> float:
    """Ceiling on the per-share put premium: the cap-strike put priced
    at the benchmark volatility."""
    return float(bs_put_core(price, price * (1.0 - 1.0 / params.lambda_max),
                             params.theta * params.sigma_b, params.t_opt))


def adaptive_lambda_hedge(price: float, sigma: float, params: HedgeParams) -> float:
    """Long-side adaptive cap: the leverage whose put premium equals the
    ceiling, clamped to [1, lambda_max]."""
    if price <= 0.0:
        raise ValueError(f"price must be positive, got {price}")
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma <= params.sigma_b:
        return params.lambda_max
    target = premium_cap(price, params)
    lam = solve_lambda_cap(price, params.theta * sigma, target,
                           params.lambda_max, True)
    return float(min(params.lambda_max, max(1.0, lam)))


def adaptive_lambda_hedge_short(price: float, sigma: float,
                                params: HedgeParams) -> float:
    """Short-side adaptive cap via call premiums; requires lambda_max > 1."""
    if params.lambda_max <= 1.0:
        raise ValueError("short-side cap needs lambda_max > 1")
    if sigma <= params.sigma_b:
        return params.lambda_max
    target = float(bs_call_core(
        price, price * (1.0 + 1.0 / (params.lambda_max - 1.0)),
        params.theta * params.sigma_b, 1.0))
    lam = solve_lambda_cap(price, params.theta * sigma, target,
                           params.lambda_max, False)
    return float(min(params.lambda_max, max(1.0, lam)))


def binding_lambda_hedge(price: float, sigma: float, params: HedgeParams,
                         short_selling: bool) -> float:
    """Cap actually applied in the demand function: minimum of the long
    and (when shorting is possible) short ceilings."""
    return float(hedge_lambda_adapt(price, sigma, params.sigma_b, params.theta,
                                    params.lambda_max, short_selling))
