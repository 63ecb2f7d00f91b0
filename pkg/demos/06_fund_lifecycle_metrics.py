"""Fund lifecycles: failures, measurement windows, investor returns.

Walks one basle run and shows how per-fund indicators are assembled:
lifecycle windows between (re)births and failures, adjusted investor
returns (flows removed, expenses added back), hypothetical manager fees,
and the bank-loss tally.

Run:  python demos/06_fund_lifecycle_metrics.py
"""

import numpy as np

from levsim import SimParams, Simulation, run_metrics
from levsim.metrics import fund_windows

params = SimParams(lambda_max=12.0, scheme="basle")
trace = Simulation(params, seed=6).run(20_000)
m = run_metrics(trace, params)

print(f"{'beta':>5s} {'windows':>8s} {'defaults':>9s} {'failures':>9s} "
      f"{'r_inv/yr':>9s} {'fees/yr':>10s}")
for h, beta in enumerate(params.betas):
    n_win = len(fund_windows(trace, h))
    print(f"{beta:5.0f} {n_win:8d} "
          f"{int((trace.default_event[:, h] == 1).sum()):9d} "
          f"{int((trace.default_event[:, h] > 0).sum()):9d} "
          f"{m.investor_return[h]:+9.3f} {m.manager_profit[h]:10.3g}")

top = m.most_aggressive
windows = fund_windows(trace, top)
print(f"\nmost aggressive fund (beta={params.betas[top]:.0f}): "
      f"{len(windows)} lifecycle windows")
for start, end, failed in windows[:8]:
    label = "failed" if failed else "open at end"
    print(f"  steps {start + 1:>6d}..{end:>6d}  ({label})")
if len(windows) > 8:
    print(f"  ... {len(windows) - 8} more")

print(f"\nbank losses:    {m.bank_losses_annual:10.3g} per year")
print(f"unpaid hedges:  {m.unpaid_premiums_annual:10.3g} per year")
print(f"cost of capital: {m.effective_interest_annual:9.5f} per year")
