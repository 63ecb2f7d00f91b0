"""Domain state types: fund managers, the noise trader, the market."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class FundState:
    """One heterogeneous fund manager.

    ``cash`` is negative while the fund borrows; ``shares`` is negative
    while it is short.  ``reintro_in == 0`` means the fund is in
    business, otherwise it counts the steps until a replacement fund
    (same aggression, fresh endowment) enters the market.
    """

    beta: float
    shares: float = 0.0
    cash: float = 0.0
    wealth: float = 0.0
    perf_ema: float = 0.0
    reintro_in: int = 0
    cum_flows: float = 0.0
    cum_expenses: float = 0.0
    m_crit_long: float = 0.0
    m_crit_short: float = 0.0

    @classmethod
    def fresh(cls, beta: float, wealth: float, lambda_max: float) -> "FundState":
        return cls(
            beta=beta,
            shares=0.0,
            cash=wealth,
            wealth=wealth,
            m_crit_long=lambda_max / beta,
            m_crit_short=(1.0 - lambda_max) / beta,
        )

    @property
    def is_active(self) -> bool:
        return self.reintro_in == 0

    def leverage(self, price: float) -> float:
        """Current leverage: position value over wealth for longs, the
        balance-sheet asset side over wealth for shorts."""
        if not self.is_active or self.wealth <= 0.0 or self.shares == 0.0:
            return 0.0
        position = self.shares * price
        if self.shares > 0.0:
            return position / self.wealth
        return (self.wealth - position) / self.wealth


@dataclass
class NoiseState:
    """Log of the representative noise trader's dollar demand."""

    log_xi: float

    @property
    def xi(self) -> float:
        return float(np.exp(self.log_xi))


@dataclass
class MarketState:
    """Current price plus the rolling log-return window."""

    price: float
    return_window: np.ndarray
    t: int = 0
    sigma_hist: float = 0.0


@dataclass
class StepReport:
    """Per-step observables emitted by the simulation."""

    t: int
    price: float
    mispricing: float
    lambda_adapt: float
    sigma_hist: float
    demand: np.ndarray
    wealth: np.ndarray
    leverage: np.ndarray
    flow: np.ndarray
    cost: np.ndarray
    defaults_this_step: int
    bank_loss_this_step: float
    unpaid_premiums_this_step: float
    shares_traded: float
    clearing_residual: float
