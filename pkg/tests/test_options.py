"""Option pricing, hedge strikes/costs, and the hedging-cost cap."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from levsim import (
    HedgeParams,
    SimParams,
    adaptive_lambda_hedge,
    adaptive_lambda_hedge_short,
    binding_lambda_hedge,
    bs_price,
    call_strike,
    effective_spread,
    hedge_cost,
    hedge_strikes,
    premium_cap,
    put_strike,
)
from levsim.options import hedge_cost_term, position_premium
from levsim.states import FundState

HP = HedgeParams.from_sim(SimParams(lambda_max=10.0))


# -- strikes ----------------------------------------------------------------

def test_put_strike_at_unit_leverage_is_zero():
    assert put_strike(1.0, 1.0) == 0.0


def test_strike_hand_values():
    assert put_strike(1.0, 2.0) == pytest.approx(0.5)
    assert call_strike(1.0, 2.0) == pytest.approx(2.0)
    k_put, k_call = hedge_strikes(1.0, 2.0)
    assert (k_put, k_call) == (pytest.approx(0.5), pytest.approx(2.0))


def test_call_strike_requires_leverage_above_one():
    with pytest.raises(ValueError):
        call_strike(1.0, 1.0)
    assert hedge_strikes(1.0, 1.0)[1] is None


def test_put_strike_requires_leverage_at_least_one():
    with pytest.raises(ValueError):
        put_strike(1.0, 0.5)


# -- pricing ----------------------------------------------------------------

def lognormal_payoff_price(kind, spot, strike, sigma, t_opt):
    """Quadrature oracle: discounted expectation of the payoff under the
    zero-rate lognormal terminal distribution."""
    if sigma == 0.0 or t_opt == 0.0:
        intrinsic = strike - spot if kind == "put" else spot - strike
        return max(0.0, intrinsic)
    s = sigma * math.sqrt(t_opt)

    def integrand(z):
        terminal = spot * math.exp(s * z - 0.5 * s * s)
        payoff = strike - terminal if kind == "put" else terminal - strike
        return max(0.0, payoff) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    # split at the payoff kink for quadrature accuracy
    z_kink = (math.log(strike / spot) + 0.5 * s * s) / s if strike > 0 else 0.0
    z_kink = min(12.0, max(-12.0, z_kink))
    lo, _ = quad(integrand, -12.0, z_kink, limit=400, epsabs=1e-13)
    hi, _ = quad(integrand, z_kink, 12.0, limit=400, epsabs=1e-13)
    return lo + hi


def test_put_with_zero_strike_is_worthless():
    assert bs_price("put", 1.0, 0.0, 0.5) == 0.0


def test_deterministic_limit():
    assert bs_price("put", 1.0, 0.9, 0.0) == 0.0
    assert bs_price("call", 1.0, 0.9, 0.0) == pytest.approx(0.1)


def test_put_value_against_quadrature_oracle():
    got = bs_price("put", 1.0, 0.9, 0.2, 1.0)
    oracle = lognormal_payoff_price("put", 1.0, 0.9, 0.2, 1.0)
    assert got == pytest.approx(oracle, abs=1e-9)
    assert got == pytest.approx(0.0359, abs=5e-4)


@pytest.mark.parametrize("kind,strike", [("put", 0.5), ("put", 1.1),
                                         ("call", 0.8), ("call", 2.0)])
def test_prices_against_quadrature_oracle(kind, strike):
    got = bs_price(kind, 1.0, strike, 0.35, 1.0)
    oracle = lognormal_payoff_price(kind, 1.0, strike, 0.35, 1.0)
    assert got == pytest.approx(oracle, abs=1e-9)


@given(spot=st.floats(0.05, 50.0), strike=st.floats(0.0, 50.0),
       sigma=st.floats(0.0, 2.0), t_opt=st.floats(0.1, 5.0))
@settings(max_examples=300, deadline=None)
def test_put_call_parity(spot, strike, sigma, t_opt):
    call = bs_price("call", spot, strike, sigma, t_opt)
    put = bs_price("put", spot, strike, sigma, t_opt)
    assert call - put == pytest.approx(spot - strike, abs=1e-12 * max(spot, strike, 1.0))


def test_bs_price_validation():
    with pytest.raises(ValueError):
        bs_price("straddle", 1.0, 1.0, 0.2)
    with pytest.raises(ValueError):
        bs_price("put", -1.0, 1.0, 0.2)
    with pytest.raises(ValueError):
        bs_price("put", 1.0, -0.1, 0.2)


def test_premium_increases_with_leverage():
    # the strike moves toward the money as leverage grows
    sigma_eff = 0.15
    put_prem = [bs_price("put", 1.0, put_strike(1.0, lam), sigma_eff)
                for lam in np.linspace(1.01, 30.0, 40)]
    assert (np.diff(put_prem) > 0.0).all()
    call_prem = [bs_price("call", 1.0, call_strike(1.0, lam), sigma_eff)
                 for lam in np.linspace(1.01, 30.0, 40)]
    assert (np.diff(call_prem) > 0.0).all()


# -- hedge costs ------------------------------------------------------------

def test_hedge_cost_no_position():
    f = FundState(beta=10.0, shares=0.0, cash=2e6, wealth=2e6)
    assert hedge_cost(f, price=1.0, sigma=0.05, theta=4.5) == 0.0


def test_hedge_cost_unleveraged_long_is_free():
    f = FundState(beta=10.0, shares=1e6, cash=1e6, wealth=2e6)  # leverage 0.5
    assert hedge_cost(f, price=1.0, sigma=0.05, theta=4.5) == 0.0


def test_hedge_cost_hand_value():
    assert hedge_cost_term(1e6, 0.001) == pytest.approx(-1000.0)
    assert hedge_cost_term(-1e6, 0.001) == pytest.approx(-1000.0)


def test_hedge_cost_prices_the_entry_hedge():
    f = FundState(beta=10.0, shares=2e6, cash=-1e6, wealth=1e6)  # leverage 2
    sigma, theta = 0.05, 4.5
    prem = bs_price("put", 1.0, put_strike(1.0, 2.0), theta * sigma)
    assert hedge_cost(f, 1.0, sigma, theta) == pytest.approx(-2e6 * prem, rel=1e-12)


def test_position_premium_short_uses_call():
    prem = position_premium(-1e6, 1e6, 1.0, 0.3)
    # short leverage = (W - D p) / W = 2, so the strike is 2.0
    assert prem == pytest.approx(bs_price("call", 1.0, 2.0, 0.3), rel=1e-12)


# -- effective spread -------------------------------------------------------

def test_effective_spread_free_hedge():
    f = FundState(beta=10.0, shares=-1e6, cash=2e6, wealth=1e6)
    assert effective_spread(f, price=1.0, premium=0.0) == 0.0


def test_effective_spread_hand_value():
    f = FundState(beta=10.0, shares=2e6, cash=-1e6, wealth=1e6)  # leverage 2
    assert effective_spread(f, 1.0, 0.005) == pytest.approx(0.01, rel=1e-12)


def test_effective_spread_linear_in_premium():
    f = FundState(beta=10.0, shares=2e6, cash=-1e6, wealth=1e6)
    assert effective_spread(f, 1.0, 0.01) == pytest.approx(
        2 * effective_spread(f, 1.0, 0.005), rel=1e-12)


def test_effective_spread_undefined_without_loan():
    f = FundState(beta=10.0, shares=1e6, cash=1e6, wealth=2e6)
    assert math.isnan(effective_spread(f, 1.0, 0.005))


# -- adaptive cap -----------------------------------------------------------

def test_hedge_cap_full_at_or_below_benchmark():
    assert adaptive_lambda_hedge(1.0, HP.sigma_b, HP) == HP.lambda_max
    assert adaptive_lambda_hedge(1.0, 0.0, HP) == HP.lambda_max


def test_hedge_cap_binds_above_benchmark():
    lam = adaptive_lambda_hedge(1.0, 2 * HP.sigma_b, HP)
    assert 1.0 <= lam < HP.lambda_max


def test_hedge_cap_solution_matches_premium_ceiling():
    price = 1.0
    sigma = 2 * HP.sigma_b
    lam = adaptive_lambda_hedge(price, sigma, HP)
    target = premium_cap(price, HP)
    solved = bs_price("put", price, put_strike(price, lam), HP.theta * sigma)
    assert abs(solved - target) <= 1e-10 * price


def test_hedge_cap_monotone_in_volatility():
    sigmas = np.linspace(HP.sigma_b, 10 * HP.sigma_b, 25)
    caps = [adaptive_lambda_hedge(1.0, s, HP) for s in sigmas]
    assert (np.diff(caps) <= 1e-9).all()


def test_hedge_cap_spot_independent():
    sigma = 3 * HP.sigma_b
    lam_low = adaptive_lambda_hedge(0.5, sigma, HP)
    lam_high = adaptive_lambda_hedge(2.0, sigma, HP)
    assert lam_low == pytest.approx(lam_high, rel=1e-6)


def test_short_side_cap_mirrors_long():
    sigma = 2 * HP.sigma_b
    lam_short = adaptive_lambda_hedge_short(1.0, sigma, HP)
    assert 1.0 <= lam_short < HP.lambda_max
    target = bs_price("call", 1.0, call_strike(1.0, HP.lambda_max),
                      HP.theta * HP.sigma_b)
    solved = bs_price("call", 1.0, call_strike(1.0, lam_short),
                      HP.theta * sigma)
    assert abs(solved - target) <= 1e-10
    with pytest.raises(ValueError):
        adaptive_lambda_hedge_short(
            1.0, sigma, HedgeParams(theta=4.5, sigma_b=HP.sigma_b, lambda_max=1.0))


def test_binding_cap_is_minimum_of_sides():
    sigma = 2 * HP.sigma_b
    lam_long = adaptive_lambda_hedge(1.0, sigma, HP)
    lam_short = adaptive_lambda_hedge_short(1.0, sigma, HP)
    lam = binding_lambda_hedge(1.0, sigma, HP, short_selling=True)
    assert lam == pytest.approx(min(lam_long, lam_short), rel=1e-9)
    lam_no_short = binding_lambda_hedge(1.0, sigma, HP, short_selling=False)
    assert lam_no_short == pytest.approx(lam_long, rel=1e-9)


def test_unit_cap_disables_leverage_at_any_volatility():
    hp1 = HedgeParams(theta=4.5, sigma_b=HP.sigma_b, lambda_max=1.0)
    assert adaptive_lambda_hedge(1.0, 5 * HP.sigma_b, hp1) == 1.0
    assert binding_lambda_hedge(1.0, 5 * HP.sigma_b, hp1, True) == 1.0
