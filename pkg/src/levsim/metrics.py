"""Run-level performance and efficiency indicators.

All rates and frequencies are annualized by ``steps_per_year`` (one
step is five trading days, 250 trading days per year).  Aggregation is
pure over the recorded trace; summation orders are fixed so repeated
evaluation is bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import Scheme, SimParams
from .simulation import RunTrace

HIST_BINS = 201
MANAGEMENT_FEE = 0.02     # per year, on average assets under management
PERFORMANCE_FEE = 0.20    # on positive annual adjusted return


#: Lifecycle-event codes in the default_event trace (match the engine).
EVENT_DEFAULT = 1     # insolvency: wealth strictly negative
EVENT_SHUTDOWN = 2    # solvent exit at the survival floor


@dataclass
class RunMetrics:
    """Aggregated indicators of one run.  Per-fund arrays follow the
    fund order of the parameters.

    ``default_prob_annual`` counts insolvencies only (defaults in the
    credit sense); ``failure_prob_annual`` additionally includes solvent
    shutdowns at the survival floor.
    """

    n_steps: int
    betas: tuple
    volatility_index: float
    return_skewness: float
    return_excess_kurtosis: float
    avg_volume: float
    avg_leverage: float
    default_prob_annual: np.ndarray
    failure_prob_annual: np.ndarray
    investor_return: np.ndarray
    investor_return_windows: np.ndarray
    manager_profit: np.ndarray
    bank_losses_annual: float
    unpaid_premiums_annual: float
    effective_interest_annual: float
    return_histogram: tuple
    defaults_total: int
    failures_total: int
    max_clearing_residual: float
    max_cap_violation: float
    max_selffin_error: float

    @property
    def most_aggressive(self) -> int:
        """Index of the highest-aggression fund (-1 when no funds)."""
        if not self.betas:
            return -1
        return int(np.argmax(self.betas))


def adjusted_return(wealth_start: float, wealth_end: float, net_flows: float,
                    expense_adjustment: float) -> float:
    """Investor return over a window, net of deposits/withdrawals and
    with the scheme's expense adjustment applied."""
    return (wealth_end - net_flows + expense_adjustment) / wealth_start - 1.0


def expense_adjustment(trace: RunTrace, params: SimParams, fund: int,
                       t_from: int, t_to: int) -> float:
    """Expenses paid by one fund over trace steps [t_from, t_to],
    added back when computing the adjusted investor return (which is
    therefore gross of borrowing costs).

    Basle: spread accrued on loan balances (long) and on the borrowed
    shares (short).  Perfect hedge: accumulated premium outlay.
    Unregulated: zero.  Always non-negative.
    """
    if t_to < t_from or params.scheme is Scheme.UNREGULATED:
        return 0.0
    sl = slice(t_from, t_to + 1)
    d = trace.demand[sl, fund]
    if params.scheme is Scheme.BASLE:
        m = trace.cash[sl, fund]
        p = trace.price[sl]
        long_terms = np.where(m < 0.0, -m * params.S, 0.0)
        short_terms = np.where(d < 0.0, -d * p * params.S, 0.0)
        return float(np.sum(long_terms) + np.sum(short_terms))
    prem = trace.premium[sl, fund]
    return float(np.sum(np.abs(d) * prem))


def fund_windows(trace: RunTrace, fund: int) -> list:
    """Measurement windows for one fund: (start, end, defaulted) with
    start = -1 for the run start.  Each window spans from a (re)birth to
    the fund's default or the end of the run."""
    status = trace.status[:, fund]
    defev = trace.default_event[:, fund]
    T = trace.n_steps
    windows = []
    start = -1
    prev = 0
    for t in range(T):
        if defev[t]:
            if start is not None:
                windows.append((start, t, True))
            start = None
        elif status[t] == 0 and (prev > 0 or start is None):
            start = t
        prev = status[t]
    if start is not None and T - 1 > start:
        windows.append((start, T - 1, False))
    return windows


def investor_returns(trace: RunTrace, params: SimParams) -> np.ndarray:
    """Mean annual adjusted investor return per fund.

    Measured over consecutive one-year blocks, each rebased at the
    wealth the investor had at the year start (the fresh endowment if
    the fund re-entered during the year).  A year in which the fund goes
    out of business ends at zero wealth, so it contributes close to -1,
    deviations coming from flows and expenses.  Years in which the fund
    is out of business throughout are skipped (no investor base)."""
    H = trace.num_funds
    spy = params.steps_per_year
    T = trace.n_steps
    years = T // spy
    out = np.zeros(H)
    for h in range(H):
        values = []
        for y in range(years):
            t0 = y * spy
            t1 = t0 + spy - 1
            failed = trace.default_event[t0:t1 + 1, h].any()
            alive_at_start = t0 == 0 or trace.status[t0 - 1, h] == 0
            if alive_at_start:
                w_base = params.W0 if t0 == 0 else float(trace.wealth[t0 - 1, h])
                win_from = t0
            else:
                reborn = np.nonzero(trace.status[t0:t1 + 1, h] == 0)[0]
                if len(reborn) == 0:
                    continue
                w_base = params.W0
                win_from = t0 + int(reborn[0]) + 1
                if win_from > t1:
                    continue
            w_end = 0.0 if failed else float(trace.wealth[t1, h])
            flows = float(np.sum(trace.flows[win_from:t1 + 1, h]))
            f_adj = expense_adjustment(trace, params, h, win_from, t1)
            values.append(adjusted_return(w_base, w_end, flows, f_adj))
        out[h] = float(np.mean(values)) if values else 0.0
    return out


def investor_returns_windows(trace: RunTrace, params: SimParams) -> np.ndarray:
    """Adjusted investor return per fund over lifecycle windows.

    Each window runs from a (re)birth to the fund's failure or the end
    of the run, starts at the fresh endowment, and ends at zero wealth
    when it ends in a failure (flows already include any residual
    returned at a survival-floor shutdown).  Window returns are averaged
    weighted by window length and expressed per year: investor gains are
    extracted by flows and so accrue linearly with time in business,
    while each failure costs a bounded -1."""
    H = trace.num_funds
    spy = params.steps_per_year
    out = np.zeros(H)
    for h in range(H):
        total = 0.0
        steps = 0
        for start, end, defaulted in fund_windows(trace, h):
            w_end = 0.0 if defaulted else float(trace.wealth[end, h])
            flows = float(np.sum(trace.flows[start + 1:end + 1, h]))
            f_adj = expense_adjustment(trace, params, h, start + 1, end)
            total += adjusted_return(params.W0, w_end, flows, f_adj)
            steps += end - start
        out[h] = total * spy / steps if steps > 0 else 0.0
    return out


def manager_profits(trace: RunTrace, params: SimParams) -> np.ndarray:
    """Mean annual hypothetical fee income per fund.

    Per 50-step year: a 2% fee on average assets under management plus
    20% of the positive annual adjusted return on the investor base at
    the year start (the fresh endowment if the fund re-enters during the
    year).  Years in which the fund defaults pay nothing.  These fees
    are indicators only and never touch fund wealth.
    """
    spy = params.steps_per_year
    H = trace.num_funds
    T = trace.n_steps
    years = T // spy
    out = np.zeros(H)
    if years == 0:
        return out
    for h in range(H):
        profits = []
        for y in range(years):
            t0 = y * spy
            t1 = t0 + spy - 1
            if trace.default_event[t0:t1 + 1, h].any():
                profits.append(0.0)
                continue
            aum = float(np.mean(np.abs(trace.demand[t0:t1 + 1, h])
                                * trace.price[t0:t1 + 1]))
            fee = MANAGEMENT_FEE * aum
            # investor base and window for the performance fee
            alive_at_start = t0 == 0 or trace.status[t0 - 1, h] == 0
            if alive_at_start:
                w_base = params.W0 if t0 == 0 else float(trace.wealth[t0 - 1, h])
                win_from = t0
            else:
                reborn = np.nonzero(trace.status[t0:t1 + 1, h] == 0)[0]
                if len(reborn) == 0:
                    profits.append(fee)
                    continue
                w_base = params.W0
                win_from = t0 + int(reborn[0]) + 1
            if win_from > t1:
                profits.append(fee)
                continue
            w_end = float(trace.wealth[t1, h])
            flows = float(np.sum(trace.flows[win_from:t1 + 1, h]))
            f_adj = expense_adjustment(trace, params, h, win_from, t1)
            r_year = adjusted_return(w_base, w_end, flows, f_adj)
            profits.append(fee + PERFORMANCE_FEE * max(0.0, r_year) * w_base)
        out[h] = float(np.mean(profits))
    return out


def effective_interest_annual(trace: RunTrace, params: SimParams) -> float:
    """Average annualized cost of capital.

    Unregulated loans are free.  Basle loans pay the quoted benchmark
    plus spread regardless of usage.  Hedged loans pay the premium
    divided by the loan size, averaged over the fund-steps that actually
    carry a loan (zero if none ever does).
    """
    spy = params.steps_per_year
    if params.scheme is Scheme.UNREGULATED:
        return 0.0
    if params.scheme is Scheme.BASLE:
        return (params.i_b + params.S) * spy
    lev = trace.leverage
    prem = trace.premium
    d = trace.demand
    p = trace.price[:, None]
    if d.size == 0:
        return 0.0
    long_mask = (d > 0.0) & (lev > 1.0)
    short_mask = d < 0.0
    total = 0.0
    count = 0
    if long_mask.any():
        pl = np.broadcast_to(p, d.shape)[long_mask]
        rates = prem[long_mask] / (pl * (1.0 - 1.0 / lev[long_mask]))
        total += float(np.sum(rates))
        count += rates.size
    if short_mask.any():
        ps = np.broadcast_to(p, d.shape)[short_mask]
        rates = prem[short_mask] / ps
        total += float(np.sum(rates))
        count += rates.size
    if count == 0:
        return 0.0
    return total / count * spy


def _moments(returns: np.ndarray) -> tuple:
    if len(returns) == 0:
        return 0.0, 0.0, 0.0
    c = returns - returns.mean()
    m2 = float(np.mean(c * c))
    if m2 == 0.0:
        return 0.0, 0.0, 0.0
    m3 = float(np.mean(c ** 3))
    m4 = float(np.mean(c ** 4))
    return float(np.sqrt(m2)), m3 / m2 ** 1.5, m4 / (m2 * m2) - 3.0


def return_histogram(returns: np.ndarray, bins: int = HIST_BINS) -> tuple:
    """Normalized histogram (mass sums to one) over the observed range,
    exported raw so plots can re-bin."""
    counts, edges = np.histogram(returns, bins=bins)
    total = counts.sum()
    mass = counts / total if total > 0 else counts.astype(np.float64)
    return mass, edges


def run_metrics(trace: RunTrace, params: SimParams) -> RunMetrics:
    """All indicators of one completed run."""
    H = trace.num_funds
    T = trace.n_steps
    spy = params.steps_per_year
    returns = trace.log_returns()
    vol, skew, exkurt = _moments(returns)

    if H > 0:
        avg_volume = float(np.sum(trace.shares_traded)) / (H * T)
        avg_leverage = float(np.sum(trace.leverage)) / (H * T)
        cap_gap = trace.leverage - trace.lambda_adapt[:, None]
        max_cap_violation = max(0.0, float(cap_gap.max()))
        selffin = np.abs(trace.wealth
                         - (trace.demand * trace.price[:, None] + trace.cash))
        rel = selffin / np.maximum(1.0, np.abs(trace.wealth))
        max_selffin = float(rel.max())
    else:
        avg_volume = 0.0
        avg_leverage = 0.0
        max_cap_violation = 0.0
        max_selffin = 0.0

    defaults = (trace.default_event == EVENT_DEFAULT).sum(axis=0)
    failures = (trace.default_event > 0).sum(axis=0)
    return RunMetrics(
        n_steps=T,
        betas=tuple(params.betas),
        volatility_index=vol,
        return_skewness=skew,
        return_excess_kurtosis=exkurt,
        avg_volume=avg_volume,
        avg_leverage=avg_leverage,
        default_prob_annual=defaults * spy / T,
        failure_prob_annual=failures * spy / T,
        investor_return=investor_returns(trace, params),
        investor_return_windows=investor_returns_windows(trace, params),
        manager_profit=manager_profits(trace, params),
        bank_losses_annual=float(np.sum(trace.bank_loss)) * spy / T,
        unpaid_premiums_annual=float(np.sum(trace.unpaid_premiums)) * spy / T,
        effective_interest_annual=effective_interest_annual(trace, params),
        return_histogram=return_histogram(returns),
        defaults_total=int(defaults.sum()),
        failures_total=int(failures.sum()),
        max_clearing_residual=float(np.max(trace.clearing_residual)),
        max_cap_violation=max_cap_violation,
        max_selffin_error=max_selffin,
    )
