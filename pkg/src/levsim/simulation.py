"""Simulation orchestration: single timesteps, full runs, and the
fund-level update rules.

Intra-step order: noise update, volatility and policy cap, market
clearing, per-fund wealth/flow/cost updates, default handling and
reintroduction.  Margin calls are absorbed by the capped demand function
inside the clearing, so after every step each active fund satisfies the
leverage cap and the self-financing identity W = D p + M exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import engine
from .clearing import ClearingFailure, DEFAULT_PRICE_TOL, RESIDUAL_FRACTION
from .options import hedge_cost_term
from .params import Scheme, SimParams
from .regulation import spread_cost
from .states import FundState, MarketState, NoiseState, StepReport


def ou_step(noise: NoiseState, draw: float, params: SimParams) -> NoiseState:
    """One update of the noise trader's log dollar demand, mean
    reverting around the log market value of the supply."""
    log_vn = math.log(params.V * params.N)
    return NoiseState(
        log_xi=params.rho * noise.log_xi + params.sigma_n * draw
        + (1.0 - params.rho) * log_vn
    )


def update_wealth(fund: FundState, p_prev: float, p_new: float, flow: float,
                  cost: float) -> FundState:
    """Apply trading P&L, the investor flow and the policy cost term;
    cash is reconciled so W = D p + M holds exactly."""
    w = fund.wealth + fund.shares * (p_new - p_prev) + flow + cost
    return replace(
        fund,
        wealth=w,
        cash=w - fund.shares * p_new,
        cum_flows=fund.cum_flows + flow,
        cum_expenses=fund.cum_expenses + cost,
    )


def policy_cost_term(fund: FundState, params: SimParams, p_prev: float,
                     premium_per_share: float = 0.0) -> float:
    """Wealth increment from the active scheme's borrowing costs on the
    previous step's position; zero when unregulated or unleveraged."""
    if not fund.is_active:
        return 0.0
    if params.scheme is Scheme.BASLE:
        return spread_cost(fund, p_prev, params.S)
    if params.scheme is Scheme.PERFECT_HEDGE:
        return float(hedge_cost_term(fund.shares, premium_per_share))
    return 0.0


def redeemable_cash(fund: FundState, price: float, params: SimParams,
                    p_prev: float | None = None,
                    premium_per_share: float = 0.0) -> float:
    """Cash the fund could hand back after selling out at the current
    price and settling the bank first."""
    marked = fund.shares * price + fund.cash
    prev = price if p_prev is None else p_prev
    return marked + policy_cost_term(fund, params, prev, premium_per_share)


def investor_flow(fund: FundState, redeemable: float, params: SimParams) -> float:
    """Capital placed with (or withdrawn from) the fund, proportional to
    the performance EMA over the benchmark and floored at a full
    withdrawal of the redeemable cash."""
    frac = max(-1.0, params.b * (fund.perf_ema - params.r_b))
    return frac * max(0.0, redeemable)


def handle_default_and_reintro(fund: FundState, price: float,
                               params: SimParams) -> tuple:
    """Shut down wiped-out or sub-critical funds; tick replacement
    countdowns.  Returns (fund', bank_loss)."""
    if not fund.is_active:
        remaining = fund.reintro_in - 1
        if remaining == 0:
            return FundState.fresh(fund.beta, params.W0, params.lambda_max), 0.0
        return replace(fund, reintro_in=remaining), 0.0
    if fund.wealth < 0.0:
        loss = max(0.0, -(fund.shares * price + fund.cash))
        shut = replace(fund, shares=0.0, cash=0.0, wealth=0.0,
                       reintro_in=params.T_reintro)
        return shut, loss
    if fund.wealth < params.W_crit:
        # solvent but below the survival floor: residual wealth is
        # returned to the investor, the bank is made whole
        shut = replace(fund, shares=0.0, cash=0.0, wealth=0.0,
                       reintro_in=params.T_reintro,
                       cum_flows=fund.cum_flows - fund.wealth)
        return shut, 0.0
    return fund, 0.0


@dataclass
class RunTrace:
    """Per-step arrays recorded over one run (step axis first)."""

    p0: float
    price: np.ndarray
    sigma_hist: np.ndarray
    lambda_adapt: np.ndarray
    mispricing: np.ndarray
    bank_loss: np.ndarray
    unpaid_premiums: np.ndarray
    shares_traded: np.ndarray
    clearing_residual: np.ndarray
    defaults: np.ndarray
    demand: np.ndarray
    wealth: np.ndarray
    cash: np.ndarray
    leverage: np.ndarray
    flows: np.ndarray
    costs: np.ndarray
    premium: np.ndarray
    status: np.ndarray
    default_event: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.price)

    @property
    def num_funds(self) -> int:
        return self.demand.shape[1]

    def log_returns(self) -> np.ndarray:
        prices = np.concatenate(([self.p0], self.price))
        return np.diff(np.log(prices))


class Simulation:
    """One seeded market.  Construct, then call run() or step().

    Running n steps in one call and running them one at a time produce
    bit-identical trajectories; independent runs never share state.
    """

    def __init__(self, params: SimParams, seed=None):
        self.params = params
        self._rng = np.random.default_rng(seed)
        H = params.num_funds
        self._betas = np.asarray(params.betas, dtype=np.float64)
        self._shares = np.zeros(H)
        self._cash = np.full(H, float(params.W0))
        self._wealth = np.full(H, float(params.W0))
        self._perf = np.zeros(H)
        self._premium = np.zeros(H)
        self._reintro = np.zeros(H, dtype=np.int64)
        self._cum_flows = np.zeros(H)
        self._cum_expenses = np.zeros(H)
        self._scal = np.array([math.log(params.V * params.N), float(params.V)])
        self._ret_win = np.zeros(params.tau)
        self._ret_cnt = np.zeros(1, dtype=np.int64)
        self.t = 0

    # -- state views -------------------------------------------------

    @property
    def funds(self) -> list:
        p = self.params
        out = []
        for h in range(p.num_funds):
            out.append(FundState(
                beta=p.betas[h],
                shares=float(self._shares[h]),
                cash=float(self._cash[h]),
                wealth=float(self._wealth[h]),
                perf_ema=float(self._perf[h]),
                reintro_in=int(self._reintro[h]),
                cum_flows=float(self._cum_flows[h]),
                cum_expenses=float(self._cum_expenses[h]),
                m_crit_long=p.lambda_max / p.betas[h],
                m_crit_short=(1.0 - p.lambda_max) / p.betas[h],
            ))
        return out

    @property
    def noise(self) -> NoiseState:
        return NoiseState(log_xi=float(self._scal[0]))

    @property
    def market(self) -> MarketState:
        return MarketState(
            price=float(self._scal[1]),
            return_window=self.return_window,
            t=self.t,
            sigma_hist=self.current_sigma(),
        )

    @property
    def return_window(self) -> np.ndarray:
        count = int(self._ret_cnt[0])
        tau = self.params.tau
        if count < tau:
            return self._ret_win[:count].copy()
        idx = count % tau
        return np.concatenate((self._ret_win[idx:], self._ret_win[:idx]))

    @property
    def hedge_premiums(self) -> np.ndarray:
        """Premium per share on each fund's current position (hedge scheme)."""
        return self._premium.copy()

    def current_sigma(self) -> float:
        return float(engine.rolling_sigma(
            self._ret_win, self._ret_cnt[0], self.params.tau,
            self.params.sigma_b))

    # -- advancing the market ------------------------------------------

    def run(self, n_steps: int, draws: np.ndarray | None = None) -> RunTrace:
        """Advance n_steps and return the recorded trace.

        Raises ClearingFailure if a step has no clearing price; the
        simulation state is not usable afterwards.
        """
        p = self.params
        H = p.num_funds
        if draws is None:
            draws = self._rng.standard_normal(n_steps)
        else:
            draws = np.asarray(draws, dtype=np.float64)
            if len(draws) < n_steps:
                raise ValueError("draws shorter than n_steps")
        p0 = float(self._scal[1])
        T = int(n_steps)
        f8 = np.float64
        o = {name: np.zeros(T, dtype=f8) for name in
             ("price", "sigma", "lam", "mis", "bank", "unpaid", "traded",
              "resid")}
        o_defaults = np.zeros(T, dtype=np.int64)
        oF = {name: np.zeros((T, H), dtype=f8) for name in
              ("D", "W", "M", "lev", "F", "cost", "prem")}
        o_status = np.zeros((T, H), dtype=np.int64)
        o_defev = np.zeros((T, H), dtype=np.uint8)

        status = engine.run_steps(
            T, draws,
            self._shares, self._cash, self._wealth, self._perf,
            self._premium, self._reintro, self._cum_flows, self._cum_expenses,
            self._scal, self._ret_win, self._ret_cnt,
            self._betas, p.rho, p.sigma_n, p.V, p.N, p.r_b, p.a, p.b,
            p.W0, p.W_crit, p.T_reintro, p.tau, p.theta, p.sigma_b, p.S,
            p.lambda_max, p.short_selling, p.scheme.code,
            DEFAULT_PRICE_TOL, RESIDUAL_FRACTION * p.N,
            o["price"], o["sigma"], o["lam"], o["mis"], o["bank"],
            o["unpaid"], o["traded"], o["resid"], o_defaults,
            oF["D"], oF["W"], oF["M"], oF["lev"], oF["F"], oF["cost"],
            oF["prem"], o_status, o_defev,
        )
        if status >= 0:
            raise ClearingFailure(
                f"clearing failed at step {self.t + status} "
                f"(scheme={p.scheme.value}, lambda_max={p.lambda_max})")
        self.t += T
        return RunTrace(
            p0=p0, price=o["price"], sigma_hist=o["sigma"],
            lambda_adapt=o["lam"], mispricing=o["mis"], bank_loss=o["bank"],
            unpaid_premiums=o["unpaid"], shares_traded=o["traded"],
            clearing_residual=o["resid"], defaults=o_defaults,
            demand=oF["D"], wealth=oF["W"], cash=oF["M"],
            leverage=oF["lev"], flows=oF["F"], costs=oF["cost"],
            premium=oF["prem"], status=o_status, default_event=o_defev,
        )

    def step(self, draw: float | None = None) -> StepReport:
        """Advance one timestep and report its observables."""
        draws = None if draw is None else np.array([draw], dtype=np.float64)
        t_before = self.t
        trace = self.run(1, draws=draws)
        return StepReport(
            t=t_before,
            price=float(trace.price[0]),
            mispricing=float(trace.mispricing[0]),
            lambda_adapt=float(trace.lambda_adapt[0]),
            sigma_hist=float(trace.sigma_hist[0]),
            demand=trace.demand[0].copy(),
            wealth=trace.wealth[0].copy(),
            leverage=trace.leverage[0].copy(),
            flow=trace.flows[0].copy(),
            cost=trace.costs[0].copy(),
            defaults_this_step=int(trace.defaults[0]),
            bank_loss_this_step=float(trace.bank_loss[0]),
            unpaid_premiums_this_step=float(trace.unpaid_premiums[0]),
            shares_traded=float(trace.shares_traded[0]),
            clearing_residual=float(trace.clearing_residual[0]),
        )
