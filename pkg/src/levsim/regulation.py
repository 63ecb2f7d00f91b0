"""Basle-style credit regulation: haircuts, adaptive leverage, spreads.

The bank lends against collateral after applying a volatility-dependent
haircut.  Requiring the risk-mitigated net exposure to be zero turns the
haircut into a ceiling on leverage, so the cap adapts to the measured
volatility.  Loans additionally pay a fixed per-step spread.  The
trivial unregulated policy (constant cap, no costs) lives here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._jit import njit
from .params import SimParams
from .states import FundState


@dataclass(frozen=True)
class BasleParams:
    """Haircut and spread configuration.

    ``h_min`` and ``phi`` are chosen so that the adaptive cap equals the
    static cap exactly when volatility sits at the benchmark:
    ``h_min = 1 / lambda_max`` and ``phi = 1 / (lambda_max * sigma_b)``.
    """

    h_min: float
    phi: float
    spread: float
    sigma_b: float
    i_b: float = 0.0
    fixed_cost: float = 0.0   # transaction cost term in the haircut
    t_hold: float = 1.0       # collateral holding duration (steps)

    def __post_init__(self):
        if not 0.0 < self.h_min <= 1.0:
            raise ValueError(f"h_min must be in (0, 1], got {self.h_min}")
        if self.phi <= 0.0:
            raise ValueError(f"phi must be positive, got {self.phi}")
        if self.spread < 0.0:
            raise ValueError(f"spread must be >= 0, got {self.spread}")

    @classmethod
    def from_sim(cls, params: SimParams) -> "BasleParams":
        return cls(
            h_min=1.0 / params.lambda_max,
            phi=1.0 / (params.lambda_max * params.sigma_b),
            spread=params.S,
            sigma_b=params.sigma_b,
            i_b=params.i_b,
        )


def net_exposure(loan: float, collateral: float, h_exposure: float,
                 h_collateral: float) -> float:
    """Risk-mitigated exposure of a collateralized loan, floored at zero.

    The exposure is marked up by its haircut and the collateral marked
    down by its haircut before netting.
    """
    if loan < 0.0 or collateral < 0.0:
        raise ValueError("loan and collateral must be non-negative")
    if not (0.0 <= h_exposure <= 1.0 and 0.0 <= h_collateral <= 1.0):
        raise ValueError("haircuts must lie in [0, 1]")
    return max(0.0, loan * (1.0 + h_exposure) - collateral * (1.0 - h_collateral))


def basle_haircut(sigma: float, params: BasleParams) -> float:
    """Collateral haircut at historical volatility sigma, clamped to
    [h_min, 1].  The same formula yields the exposure haircut for
    shorts (asset borrowed, cash pledged)."""
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    raw = params.phi * sigma * math.sqrt(params.t_hold) + params.fixed_cost
    return min(max(params.h_min, raw), 1.0)


@njit(cache=True)
def basle_lambda_adapt(sigma, sigma_b, lambda_max):
    """Volatility-adaptive leverage cap implied by a zero risk-mitigated
    exposure: the inverse of the haircut, clamped to [1, lambda_max]."""
    if sigma <= sigma_b:  # includes the sigma == 0 warm-up edge
        return lambda_max
    lam = lambda_max * sigma_b / sigma
    return lam if lam > 1.0 else 1.0


def adaptive_lambda_basle(sigma: float, sigma_b: float, lambda_max: float) -> float:
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    return float(basle_lambda_adapt(sigma, sigma_b, lambda_max))


@njit(cache=True)
def spread_cost_term(shares_prev, cash_prev, p_prev, spread):
    """Wealth increment from borrowing costs on the previous step.

    Leveraged long: spread accrues on the (negative) cash balance.
    Short: spread accrues on the (negative) value of the borrowed
    shares at the previous price.  Unleveraged positions pay nothing.
    """
    if cash_prev < 0.0:
        return cash_prev * spread
    if shares_prev < 0.0:
        return shares_prev * p_prev * spread
    return 0.0


def spread_cost(fund: FundState, p_prev: float, spread: float) -> float:
    if not fund.is_active:
        return 0.0
    return float(spread_cost_term(fund.shares, fund.cash, p_prev, spread))


def effective_interest_basle(params: BasleParams) -> float:
    """Per-step interest rate quoted to every fund: benchmark plus spread."""
    return params.i_b + params.spread
