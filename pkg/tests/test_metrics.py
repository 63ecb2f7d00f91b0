"""Indicator computations over recorded traces."""

import numpy as np
import pytest

from levsim import (
    RunTrace,
    Scheme,
    SimParams,
    Simulation,
    adjusted_return,
    investor_returns,
    investor_returns_windows,
    manager_profits,
    noise_only,
    run_metrics,
)
from levsim.metrics import (
    EVENT_DEFAULT,
    EVENT_SHUTDOWN,
    effective_interest_annual,
    fund_windows,
)


def synth_trace(T, H, price=None, **overrides):
    """Minimal consistent trace: flat funds at the initial endowment."""
    price = np.ones(T) if price is None else np.asarray(price, float)
    wealth = overrides.pop("wealth", np.full((T, H), 2e6))
    demand = overrides.pop("demand", np.zeros((T, H)))
    cash = overrides.pop("cash", wealth - demand * price[:, None])
    base = dict(
        p0=1.0,
        price=price,
        sigma_hist=np.zeros(T),
        lambda_adapt=np.full(T, 10.0),
        mispricing=1.0 - price,
        bank_loss=np.zeros(T),
        unpaid_premiums=np.zeros(T),
        shares_traded=np.zeros(T),
        clearing_residual=np.zeros(T),
        defaults=np.zeros(T, dtype=np.int64),
        demand=demand,
        wealth=wealth,
        cash=cash,
        leverage=np.zeros((T, H)),
        flows=np.zeros((T, H)),
        costs=np.zeros((T, H)),
        premium=np.zeros((T, H)),
        status=np.zeros((T, H), dtype=np.int64),
        default_event=np.zeros((T, H), dtype=np.uint8),
    )
    base.update(overrides)
    return RunTrace(**base)


# -- adjusted return formula --------------------------------------------------

def test_adjusted_return_pure_pnl():
    assert adjusted_return(2e6, 4e6, 0.0, 0.0) == pytest.approx(1.0)


def test_adjusted_return_of_failed_fund():
    assert adjusted_return(2e6, 0.0, 0.0, 0.0) == pytest.approx(-1.0)


def test_adjusted_return_hand_value():
    assert adjusted_return(2e6, 2.2e6, 1e5, 2e4) == pytest.approx(0.06)


# -- measurement windows ------------------------------------------------------

def test_fund_windows_split_at_failures_and_rebirths():
    T = 400
    status = np.zeros((T, 1), dtype=np.int64)
    defev = np.zeros((T, 1), dtype=np.uint8)
    defev[100, 0] = EVENT_DEFAULT
    status[100:200, 0] = np.arange(100, 0, -1)
    trace = synth_trace(T, 1, status=status, default_event=defev)
    assert fund_windows(trace, 0) == [(-1, 100, True), (200, T - 1, False)]


def test_all_cash_fund_has_exactly_zero_return():
    # no flows (b = 0), overpriced market without shorting: never trades
    params = SimParams(betas=(10.0,), short_selling=False, b=0.0)
    sim = Simulation(params, seed=0)
    draws = np.concatenate(([3.0], np.zeros(199)))
    trace = sim.run(200, draws=draws)
    assert (trace.demand == 0.0).all()
    assert investor_returns(trace, params)[0] == 0.0
    assert investor_returns_windows(trace, params)[0] == 0.0


def test_window_return_of_failed_window_near_minus_one():
    params = SimParams(betas=(10.0,))
    T = 100
    defev = np.zeros((T, 1), dtype=np.uint8)
    defev[60, 0] = EVENT_DEFAULT
    status = np.zeros((T, 1), dtype=np.int64)
    status[60:, 0] = np.arange(100, 100 - (T - 60), -1)
    wealth = np.full((T, 1), 2e6)
    wealth[60:] = 0.0
    trace = synth_trace(T, 1, status=status, default_event=defev, wealth=wealth)
    out = investor_returns_windows(trace, params)
    # single failed window of 61 steps, annualized linear rate
    assert out[0] == pytest.approx(-1.0 * 50 / 61, rel=1e-12)


# -- manager profits ----------------------------------------------------------

def test_manager_profit_flat_year_fee_only():
    params = SimParams(betas=(10.0,))
    trace = synth_trace(50, 1, demand=np.full((50, 1), 1e6))
    # AUM 1e6 at price 1, no performance over the year
    assert manager_profits(trace, params)[0] == pytest.approx(2e4)


def test_manager_profit_zero_in_failure_year():
    params = SimParams(betas=(10.0,))
    defev = np.zeros((50, 1), dtype=np.uint8)
    defev[10, 0] = EVENT_SHUTDOWN
    trace = synth_trace(50, 1, demand=np.full((50, 1), 1e6),
                        default_event=defev)
    assert manager_profits(trace, params)[0] == 0.0


def test_manager_profit_with_performance_fee():
    params = SimParams(betas=(10.0,))
    wealth = np.full((50, 1), 2e6)
    wealth[-1] = 2.2e6  # annual adjusted return 0.10 on a 2e6 base
    trace = synth_trace(50, 1, demand=np.full((50, 1), 1e6), wealth=wealth)
    assert manager_profits(trace, params)[0] == pytest.approx(
        2e4 + 0.2 * 0.1 * 2e6)


def test_manager_profit_requires_complete_year():
    params = SimParams(betas=(10.0,))
    trace = synth_trace(30, 1, demand=np.full((30, 1), 1e6))
    assert manager_profits(trace, params)[0] == 0.0


# -- run-level metrics ---------------------------------------------------------

def test_constant_price_run_has_zero_volatility():
    params = SimParams(betas=(10.0,))
    m = run_metrics(synth_trace(100, 1), params)
    assert m.volatility_index == 0.0
    assert m.return_skewness == 0.0
    assert m.return_excess_kurtosis == 0.0


def test_no_trades_no_volume():
    params = SimParams(betas=(10.0,))
    m = run_metrics(synth_trace(100, 1), params)
    assert m.avg_volume == 0.0


def fail_at(T, steps, codes, reintro=100):
    defev = np.zeros((T, 1), dtype=np.uint8)
    status = np.zeros((T, 1), dtype=np.int64)
    for t, code in zip(steps, codes):
        defev[t, 0] = code
        span = min(reintro, T - t)
        status[t:t + span, 0] = np.arange(reintro, reintro - span, -1)
    return defev, status


def test_default_frequency_annualization():
    params = SimParams(betas=(10.0,))
    T = 50_000
    defev, status = fail_at(T, [1000, 30_000], [EVENT_DEFAULT, EVENT_DEFAULT])
    trace = synth_trace(T, 1, default_event=defev, status=status)
    m = run_metrics(trace, params)
    assert m.default_prob_annual[0] == pytest.approx(2 * 50 / T)
    assert m.defaults_total == 2


def test_failures_count_shutdowns_but_defaults_do_not():
    params = SimParams(betas=(10.0,))
    T = 1000
    defev, status = fail_at(T, [100, 600], [EVENT_SHUTDOWN, EVENT_DEFAULT])
    trace = synth_trace(T, 1, default_event=defev, status=status)
    m = run_metrics(trace, params)
    assert m.defaults_total == 1
    assert m.failures_total == 2
    assert m.failure_prob_annual[0] == pytest.approx(2 * 50 / T)


def test_histogram_mass_is_one():
    params = SimParams()
    trace = Simulation(params, seed=8).run(500)
    m = run_metrics(trace, params)
    mass, edges = m.return_histogram
    assert mass.sum() == pytest.approx(1.0)
    assert len(mass) == 201
    assert len(edges) == 202


def test_bank_loss_accounting_closure():
    params = SimParams(lambda_max=15.0)
    trace = Simulation(params, seed=21).run(5000)
    m = run_metrics(trace, params)
    assert m.bank_losses_annual == pytest.approx(
        trace.bank_loss.sum() * 50 / 5000, rel=1e-12)


def test_scalar_metrics_invariant_under_fund_relabeling():
    params = SimParams()
    trace = Simulation(params, seed=13).run(400)
    m = run_metrics(trace, params)
    perm = np.arange(params.num_funds)[::-1]
    permuted = synth_trace(
        400, params.num_funds,
        price=trace.price,
        demand=trace.demand[:, perm], wealth=trace.wealth[:, perm],
        cash=trace.cash[:, perm], leverage=trace.leverage[:, perm],
        flows=trace.flows[:, perm], costs=trace.costs[:, perm],
        premium=trace.premium[:, perm], status=trace.status[:, perm],
        default_event=trace.default_event[:, perm],
        shares_traded=trace.shares_traded,
        lambda_adapt=trace.lambda_adapt,
        clearing_residual=trace.clearing_residual,
        bank_loss=trace.bank_loss,
    )
    params_perm = params.with_updates(betas=tuple(reversed(params.betas)))
    m_perm = run_metrics(permuted, params_perm)
    assert m_perm.avg_volume == pytest.approx(m.avg_volume, rel=1e-12)
    assert m_perm.volatility_index == pytest.approx(m.volatility_index, rel=1e-12)
    assert m_perm.avg_leverage == pytest.approx(m.avg_leverage, rel=1e-12)


def test_effective_interest_per_scheme():
    T, H = 4, 1
    base = dict(demand=np.full((T, H), 2e6),
                leverage=np.full((T, H), 2.0),
                premium=np.full((T, H), 0.005))
    trace = synth_trace(T, H, **base)
    assert effective_interest_annual(
        trace, SimParams(scheme="unregulated")) == 0.0
    assert effective_interest_annual(
        trace, SimParams(scheme="basle")) == pytest.approx(0.0075)
    # hedged loan: premium over loan per share = 0.005 / 0.5 per step
    got = effective_interest_annual(trace, SimParams(scheme="perfect_hedge"))
    assert got == pytest.approx(0.01 * 50, rel=1e-12)


def test_effective_interest_hedge_short_side():
    T, H = 4, 1
    trace = synth_trace(T, H, demand=np.full((T, H), -1e6),
                        wealth=np.full((T, H), 2e6),
                        leverage=np.full((T, H), 1.5),
                        premium=np.full((T, H), 0.003))
    got = effective_interest_annual(trace, SimParams(scheme="perfect_hedge"))
    assert got == pytest.approx(0.003 * 50, rel=1e-12)


def test_noise_only_run_metrics_have_no_fund_columns():
    params = noise_only(SimParams())
    trace = Simulation(params, seed=2).run(300)
    m = run_metrics(trace, params)
    assert m.most_aggressive == -1
    assert m.avg_volume == 0.0
    assert m.avg_leverage == 0.0
    assert m.default_prob_annual.shape == (0,)
