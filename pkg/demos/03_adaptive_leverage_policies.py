"""How the two regulation policies cap leverage as volatility moves.

The haircut rule inverts a volatility-scaled collateral haircut; the
perfect-hedge rule caps the per-share hedging premium at its
benchmark-volatility level.  Both grant the full static cap at or below
the benchmark volatility and force leverage to one as volatility grows,
but the hedge rule tightens much faster (option premiums are convex in
the strike).

Run:  python demos/03_adaptive_leverage_policies.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from levsim import (
    BasleParams,
    HedgeParams,
    SimParams,
    adaptive_lambda_basle,
    adaptive_lambda_hedge,
    basle_haircut,
)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

params = SimParams(lambda_max=15.0)
bp = BasleParams.from_sim(params)
hp = HedgeParams.from_sim(params)

sigmas = np.linspace(0.001, 0.08, 200)
basle = [adaptive_lambda_basle(s, params.sigma_b, params.lambda_max)
         for s in sigmas]
hedge = [adaptive_lambda_hedge(1.0, s, hp) for s in sigmas]
haircuts = [basle_haircut(s, bp) for s in sigmas]

rows = [0.5, 1.0, 2.0, 3.0, 5.0]
print(f"{'sigma/sigma_b':>14s} {'haircut':>8s} {'cap basle':>10s} {'cap hedge':>10s}")
for mult in rows:
    s = mult * params.sigma_b
    print(f"{mult:14.1f} {basle_haircut(s, bp):8.3f} "
          f"{adaptive_lambda_basle(s, params.sigma_b, params.lambda_max):10.2f} "
          f"{adaptive_lambda_hedge(1.0, s, hp):10.2f}")

fig, ax = plt.subplots(figsize=(7, 5))
ax.plot(sigmas / params.sigma_b, basle, label="haircut rule", lw=1.4)
ax.plot(sigmas / params.sigma_b, hedge, label="hedging-cost rule", lw=1.4)
ax.axvline(1.0, color="k", ls="--", lw=0.8)
ax.set_xlabel("volatility / benchmark volatility")
ax.set_ylabel("adaptive leverage cap")
ax.legend()
fig.tight_layout()
target = OUT / "adaptive_caps.png"
fig.savefig(target, dpi=120)
print(f"wrote {target}")
