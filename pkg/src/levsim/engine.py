"""Compiled per-run simulation loop.

One run is strictly sequential, so the whole step loop is JIT-compiled
and operates on flat arrays; the Python layer owns parameter handling,
trace containers and metrics.  All state arrays are mutated in place so
a run can be advanced one step at a time with identical results.
"""

from __future__ import annotations

import math

import numpy as np

from ._jit import njit
from .clearing import (
    BRACKET_FACTOR,
    MAX_BRACKET_EXPANSIONS,
    clear_price_core,
    fund_demand_shares,
)
from .options import hedge_cost_term, hedge_lambda_adapt, position_premium
from .regulation import basle_lambda_adapt, spread_cost_term

#: Scheme codes used by the kernel (must match params.Scheme.code).
SCHEME_UNREGULATED = 0
SCHEME_BASLE = 1
SCHEME_PERFECT_HEDGE = 2

#: Lifecycle-event codes in the per-fund event trace.  A default is an
#: insolvency (wealth strictly negative); a shutdown is a solvent exit
#: at the survival floor.  Both take the fund out of business.
EVENT_DEFAULT = 1
EVENT_SHUTDOWN = 2


@njit(cache=True)
def rolling_sigma(ret_win, count, tau, sigma_b):
    """Population std over the last tau returns; benchmark during warm-up."""
    if count < tau:
        return sigma_b
    mean = 0.0
    for k in range(tau):
        mean += ret_win[k]
    mean /= tau
    var = 0.0
    for k in range(tau):
        d = ret_win[k] - mean
        var += d * d
    return math.sqrt(var / tau)


@njit(cache=True)
def run_steps(
    n_steps,
    draws,
    # per-fund state, mutated in place
    shares, cash, wealth, perf_ema, premium, reintro, cum_flows, cum_expenses,
    # scalar state: scal = [log_xi, price_prev]; circular return window
    scal, ret_win, ret_cnt,
    # parameters
    betas, rho, sigma_n, fundamental, supply, r_b, ema_a, flow_b,
    w0, w_crit, t_reintro, tau, theta, sigma_b, spread, lambda_max,
    short_selling, scheme, price_tol, resid_tol,
    # per-step traces
    o_price, o_sigma, o_lam, o_mis, o_bank, o_unpaid, o_traded, o_resid,
    o_defaults,
    # per-step per-fund traces
    o_D, o_W, o_M, o_lev, o_F, o_cost, o_prem, o_status, o_defev,
):
    """Advance the market n_steps.  Returns -1 on success, else the
    index of the step whose clearing failed."""
    H = betas.shape[0]
    log_vn = math.log(fundamental * supply)
    alive = np.empty(H, dtype=np.uint8)

    for t in range(n_steps):
        # (1) noise-trader dollar demand: discrete OU in logs
        log_xi = rho * scal[0] + sigma_n * draws[t] + (1.0 - rho) * log_vn
        scal[0] = log_xi
        xi = math.exp(log_xi)
        p_prev = scal[1]

        # (2) historical volatility and the policy leverage cap
        sigma_t = rolling_sigma(ret_win, ret_cnt[0], tau, sigma_b)
        if scheme == SCHEME_BASLE:
            lam = basle_lambda_adapt(sigma_t, sigma_b, lambda_max)
        elif scheme == SCHEME_PERFECT_HEDGE:
            # premiums are homogeneous in spot, so any spot gives this cap
            lam = hedge_lambda_adapt(p_prev, sigma_t, sigma_b, theta,
                                     lambda_max, short_selling)
        else:
            lam = lambda_max

        # (3) market clearing at the capped demands
        for h in range(H):
            alive[h] = 1 if reintro[h] == 0 else 0
        p, resid, ok = clear_price_core(
            xi, shares, cash, betas, alive, lam, short_selling, fundamental,
            supply, p_prev / BRACKET_FACTOR, p_prev * BRACKET_FACTOR,
            price_tol, resid_tol, MAX_BRACKET_EXPANSIONS,
        )
        if ok == 0:
            return t

        # (4) wealth, flows, costs, defaults
        bank_loss = 0.0
        unpaid = 0.0
        traded = 0.0
        n_def = 0
        for h in range(H):
            d_old = shares[h]
            if alive[h] == 1:
                w_clear = d_old * p + cash[h]
                d_new = fund_demand_shares(d_old, cash[h], betas[h], p,
                                           fundamental, lam, short_selling)

                # performance EMA uses the trading return on entry wealth
                r_h = d_old * (p - p_prev) / wealth[h]
                pe = (1.0 - ema_a) * perf_ema[h] + ema_a * r_h
                perf_ema[h] = pe

                # policy cost accrued on last step's loan or hedge
                if scheme == SCHEME_BASLE:
                    cost = spread_cost_term(d_old, cash[h], p_prev, spread)
                elif scheme == SCHEME_PERFECT_HEDGE:
                    cost = hedge_cost_term(d_old, premium[h])
                else:
                    cost = 0.0

                # investor flow; bank obligations are senior, so the
                # redeemable amount is already net of the policy cost
                m_tilde = w_clear + cost
                frac = flow_b * (pe - r_b)
                if frac < -1.0:
                    frac = -1.0
                flow = frac * m_tilde if m_tilde > 0.0 else 0.0

                w_new = w_clear + flow + cost
                m_new = w_new - d_new * p

                if d_new > 0.0:
                    lev = d_new * p / w_clear
                elif d_new < 0.0:
                    lev = (w_clear - d_new * p) / w_clear
                else:
                    lev = 0.0

                shares[h] = d_new
                cash[h] = m_new
                wealth[h] = w_new
                cum_flows[h] += flow
                cum_expenses[h] += cost
                o_F[t, h] = flow
                o_cost[t, h] = cost
                o_lev[t, h] = lev

                if w_new < 0.0:
                    # insolvent: liquidation cannot repay the whole loan
                    if scheme == SCHEME_PERFECT_HEDGE:
                        # collateral shortfall is covered by the option;
                        # only the pending premium can go unpaid
                        owed = -cost
                        shortfall = -w_new
                        unpaid += owed if owed < shortfall else shortfall
                    else:
                        bank_loss += -w_new
                    shares[h] = 0.0
                    cash[h] = 0.0
                    wealth[h] = 0.0
                    premium[h] = 0.0
                    reintro[h] = t_reintro
                    o_defev[t, h] = EVENT_DEFAULT
                    n_def += 1
                elif w_new < w_crit:
                    # survival floor: shut down solvent, residual wealth
                    # goes back to the investor, the bank is made whole
                    o_F[t, h] = flow - w_new
                    cum_flows[h] += -w_new
                    shares[h] = 0.0
                    cash[h] = 0.0
                    wealth[h] = 0.0
                    premium[h] = 0.0
                    reintro[h] = t_reintro
                    o_defev[t, h] = EVENT_SHUTDOWN
                elif scheme == SCHEME_PERFECT_HEDGE:
                    # hedge for the position just entered, priced at the
                    # clearing spot with this step's volatility
                    premium[h] = position_premium(d_new, w_clear, p,
                                                  theta * sigma_t)
            else:
                reintro[h] -= 1
                if reintro[h] == 0:
                    # replacement fund: same aggression, fresh endowment
                    shares[h] = 0.0
                    cash[h] = w0
                    wealth[h] = w0
                    perf_ema[h] = 0.0
                    premium[h] = 0.0
                    cum_flows[h] = 0.0
                    cum_expenses[h] = 0.0

            o_D[t, h] = shares[h]
            o_W[t, h] = wealth[h]
            o_M[t, h] = cash[h]
            o_prem[t, h] = premium[h]
            o_status[t, h] = reintro[h]
            traded += abs(shares[h] - d_old)

        # (5) market bookkeeping
        ret_win[ret_cnt[0] % tau] = math.log(p / p_prev)
        ret_cnt[0] += 1
        scal[1] = p

        o_price[t] = p
        o_sigma[t] = sigma_t
        o_lam[t] = lam
        o_mis[t] = fundamental - p
        o_bank[t] = bank_loss
        o_unpaid[t] = unpaid
        o_traded[t] = traded
        o_resid[t] = resid
        o_defaults[t] = n_def

    return -1
