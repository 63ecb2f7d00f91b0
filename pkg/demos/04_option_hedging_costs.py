"""Hedge strikes, premiums, and the effective spread they imply.

Under the perfect-hedge policy a leveraged long buys a one-step put
struck where liquidation just repays the loan; a short buys the mirror
call.  Premiums rise with leverage (the strike moves toward the money),
so hedging costs act like a leverage-dependent interest rate.

Run:  python demos/04_option_hedging_costs.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from levsim import (
    FundState,
    HedgeParams,
    SimParams,
    bs_price,
    call_strike,
    effective_spread,
    premium_cap,
    put_strike,
)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

params = SimParams(lambda_max=15.0)
hp = HedgeParams.from_sim(params)
price = 1.0
sigma_eff = params.theta * 2 * params.sigma_b   # volatile regime

print(f"{'leverage':>9s} {'K_put':>7s} {'K_call':>7s} {'put prem':>10s} "
      f"{'call prem':>10s} {'spread long':>12s} {'spread short':>13s}")
lams = [1.5, 2.0, 3.0, 5.0, 8.0, 12.0, 15.0]
for lam in lams:
    kp = put_strike(price, lam)
    kc = call_strike(price, lam)
    put = bs_price("put", price, kp, sigma_eff)
    call = bs_price("call", price, kc, sigma_eff)
    wealth = 1e6
    long_fund = FundState(beta=10.0, shares=lam * wealth / price,
                          cash=wealth - lam * wealth, wealth=wealth)
    short_fund = FundState(beta=10.0, shares=-(lam - 1) * wealth / price,
                           cash=lam * wealth, wealth=wealth)
    s_long = effective_spread(long_fund, price, put)
    s_short = effective_spread(short_fund, price, call)
    print(f"{lam:9.1f} {kp:7.3f} {kc:7.2f} {put:10.6f} {call:10.6f} "
          f"{s_long:12.5f} {s_short:13.5f}")

cap = premium_cap(price, hp)
print(f"\nper-share premium ceiling at the benchmark volatility: {cap:.6f}")

grid = np.linspace(1.05, 20.0, 120)
prem = [bs_price("put", price, put_strike(price, lam), sigma_eff)
        for lam in grid]
fig, ax = plt.subplots(figsize=(7, 4.5))
ax.plot(grid, prem, lw=1.4)
ax.axhline(cap, color="k", ls="--", lw=0.8, label="premium ceiling")
ax.set_xlabel("leverage")
ax.set_ylabel("put premium per share")
ax.legend()
fig.tight_layout()
target = OUT / "hedging_costs.png"
fig.savefig(target, dpi=120)
print(f"wrote {target}")
