"""Mini comparison sweep: systemic indicators across the three schemes.

Runs a reduced sweep (coarse leverage grid, short runs, few seeds) and
prints the headline indicators per scheme and cap, then projects plot
series.  The full desk protocol lives in the acceptance suite; this
finishes in about a minute.

Run:  python demos/05_scheme_comparison_sweep.py
"""

from pathlib import Path

from levsim import ExperimentConfig, SimParams, emit_plot_data, sweep

OUT = Path(__file__).parent / "out" / "mini-sweep"

config = ExperimentConfig(
    params=SimParams(),
    lambda_grid=(1.0, 3.0, 6.0, 10.0, 15.0),
    schemes=("unregulated", "basle", "perfect_hedge"),
    n_runs=3,
    steps=10_000,
    master_seed=2026,
    output_dir=OUT,
)

result = sweep(config)
assert result.ok

print(f"{'scheme':>14s} {'cap':>4s} {'vol':>7s} {'volume':>9s} {'lev':>5s} "
      f"{'defaults':>8s} {'r_inv':>7s} {'bank/yr':>9s} {'rate/yr':>8s}")
for row in result.aggregate_rows:
    print(f"{row['scheme']:>14s} {row['lambda_max']:4.0f} "
          f"{row['volatility_index_mean']:7.4f} "
          f"{row['avg_volume_mean']:9.3g} "
          f"{row['avg_leverage_mean']:5.2f} "
          f"{row['default_prob_most_aggressive_mean']:8.4f} "
          f"{row['investor_return_most_aggressive_mean']:+7.3f} "
          f"{row['bank_losses_annual_mean']:9.3g} "
          f"{row['effective_interest_annual_mean']:8.5f}")

for kind in ("volatility", "leverage", "bank_losses", "effective_interest"):
    for path in emit_plot_data(OUT, kind):
        print(f"wrote {path}")
for path in emit_plot_data(OUT, "return_dist", lambda_max=15.0):
    print(f"wrote {path}")
