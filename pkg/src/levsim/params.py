"""Exogenous parameter set and credit-regulation scheme selection.

Units: prices are currency per share, wealth and cash are currency,
holdings are shares.  One timestep represents five trading days, so with
250 trading days per year a year is ``steps_per_year = 50`` steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Sequence


class Scheme(Enum):
    """Credit-regulation regime applied by the lending bank."""

    UNREGULATED = "unregulated"
    BASLE = "basle"
    PERFECT_HEDGE = "perfect_hedge"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for scheme in cls:
            if scheme.value == key:
                return scheme
        raise ValueError(
            f"unknown scheme {value!r}; expected one of {[s.value for s in cls]}"
        )

    @property
    def code(self) -> int:
        """Integer code used by the compiled engine."""
        return _SCHEME_CODES[self]


_SCHEME_CODES = {Scheme.UNREGULATED: 0, Scheme.BASLE: 1, Scheme.PERFECT_HEDGE: 2}

#: Default manager aggression levels: ten funds, evenly spread.
DEFAULT_BETAS: tuple = tuple(float(b) for b in range(5, 51, 5))


@dataclass(frozen=True)
class SimParams:
    """Full exogenous configuration of one simulated market.

    Defaults reproduce the standard desk configuration; only
    ``lambda_max``, ``scheme`` and ``short_selling`` are usually varied.
    """

    betas: tuple = DEFAULT_BETAS          # aggression per fund manager
    rho: float = 0.99                     # noise-trader persistence
    sigma_n: float = 0.035                # noise-trader shock std
    V: float = 1.0                        # perceived fundamental value
    N: float = 1e9                        # total asset supply (shares)
    r_b: float = 0.003                    # investor benchmark return per step
    a: float = 0.1                        # performance EMA weight
    b: float = 0.15                       # investor flow sensitivity
    W0: float = 2e6                       # initial fund wealth
    W_crit: float = 2e5                   # survival floor
    T_reintro: int = 100                  # steps until a defaulted fund is replaced
    tau: int = 10                         # volatility window (steps)
    theta: float = 4.5                    # volatility scale for option pricing
    sigma_b: float = 0.01175              # benchmark volatility
    S: float = 0.00015                    # per-step loan spread
    i_b: float = 0.0                      # benchmark interest rate per step
    lambda_max: float = 10.0              # static leverage cap
    short_selling: bool = True
    scheme: Scheme = Scheme.UNREGULATED
    steps_per_year: int = 50

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        problems = []
        if not 0.0 < self.rho < 1.0:
            problems.append(f"rho must be in (0, 1), got {self.rho}")
        if self.sigma_n < 0.0:
            problems.append(f"sigma_n must be >= 0, got {self.sigma_n}")
        if self.N <= 0.0:
            problems.append(f"N must be positive, got {self.N}")
        if self.lambda_max < 1.0:
            problems.append(f"lambda_max must be >= 1, got {self.lambda_max}")
        if self.tau < 2:
            problems.append(f"tau must be >= 2, got {self.tau}")
        for name in ("V", "W0", "W_crit"):
            if getattr(self, name) <= 0.0:
                problems.append(f"{name} must be positive, got {getattr(self, name)}")
        if any(b <= 0.0 for b in self.betas):
            problems.append("betas must be strictly positive")
        if len(set(self.betas)) != len(self.betas):
            problems.append("betas must be distinct")
        if self.theta <= 0.0:
            problems.append(f"theta must be positive, got {self.theta}")
        if self.sigma_b <= 0.0:
            problems.append(f"sigma_b must be positive, got {self.sigma_b}")
        if self.S < 0.0:
            problems.append(f"S must be >= 0, got {self.S}")
        if self.i_b < 0.0:
            problems.append(f"i_b must be >= 0, got {self.i_b}")
        if self.T_reintro < 1:
            problems.append(f"T_reintro must be >= 1, got {self.T_reintro}")
        if not 0.0 < self.a <= 1.0:
            problems.append(f"a must be in (0, 1], got {self.a}")
        if self.b < 0.0:
            problems.append(f"b must be >= 0, got {self.b}")
        if self.steps_per_year < 1:
            problems.append(f"steps_per_year must be >= 1, got {self.steps_per_year}")
        if problems:
            raise ValueError("invalid SimParams: " + "; ".join(problems))

    @property
    def num_funds(self) -> int:
        return len(self.betas)

    def with_updates(self, **changes) -> "SimParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Scheme):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown SimParams keys: {sorted(unknown)}")
        return cls(**data)


def noise_only(params: SimParams) -> SimParams:
    """Copy of ``params`` with fund managers disabled."""
    return params.with_updates(betas=())
