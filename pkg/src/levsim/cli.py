"""Command-line interface: simulate, sweep, plotdata, validate-config.

Exit codes: 0 success, 1 one or more cells failed, 2 bad usage or
configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .params import Scheme
from .runner import (
    ExperimentConfig,
    PLOT_KINDS,
    emit_plot_data,
    load_config,
    sweep,
)


def _add_config_options(parser, single_cell: bool) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="flat JSON config file")
    parser.add_argument("--out", dest="output_dir", type=Path, default=None,
                        help="output directory")
    parser.add_argument("--steps", type=int, default=None,
                        help="timesteps per run")
    parser.add_argument("--runs", dest="n_runs", type=int, default=None,
                        help="seeds per cell")
    parser.add_argument("--master-seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel cell workers (default: env "
                             "LEVSIM_WORKERS or 1)")
    parser.add_argument("--emit-steps", action="store_true", default=None,
                        help="also write per-step traces (large)")
    if single_cell:
        parser.add_argument("--scheme", type=str, default=None,
                            choices=[s.value for s in Scheme])
        parser.add_argument("--lambda-max", type=float, default=None)
    else:
        parser.add_argument("--schemes", type=str, default=None,
                            help="comma-separated scheme names")
        parser.add_argument("--lambda-grid", type=str, default=None,
                            help="comma-separated lambda_max values")


def _collect_overrides(args, single_cell: bool) -> dict:
    overrides = {
        "output_dir": args.output_dir,
        "steps": args.steps,
        "n_runs": args.n_runs,
        "master_seed": args.master_seed,
        "workers": args.workers,
        "emit_steps": args.emit_steps,
    }
    if single_cell:
        if args.scheme is not None:
            overrides["schemes"] = [args.scheme]
        if args.lambda_max is not None:
            overrides["lambda_max_grid"] = [args.lambda_max]
    else:
        if args.schemes is not None:
            overrides["schemes"] = [s.strip() for s in args.schemes.split(",")
                                    if s.strip()]
        if args.lambda_grid is not None:
            overrides["lambda_max_grid"] = [float(x) for x in
                                            args.lambda_grid.split(",")]
    return overrides


def _load(args, single_cell: bool) -> ExperimentConfig:
    return load_config(args.config, _collect_overrides(args, single_cell))


def _run_sweep(config: ExperimentConfig) -> int:
    result = sweep(config)
    n_cells = len(config.cells())
    print(f"{n_cells - len(result.failed_cells)}/{n_cells} cells completed; "
          f"output in {config.output_dir}")
    for name, message in result.failed_cells:
        print(f"FAILED {name}: {message}", file=sys.stderr)
    return 1 if result.failed_cells else 0


def cmd_simulate(args) -> int:
    config = _load(args, single_cell=True)
    if len(config.cells()) != 1:
        print("simulate runs exactly one cell; pass --scheme and "
              "--lambda-max (or a config with singleton grids)",
              file=sys.stderr)
        return 2
    return _run_sweep(config)


def cmd_sweep(args) -> int:
    return _run_sweep(_load(args, single_cell=False))


def cmd_plotdata(args) -> int:
    paths = emit_plot_data(args.out, args.kind, lambda_max=args.lambda_max)
    for path in paths:
        print(path)
    return 0


def cmd_validate_config(args) -> int:
    config = load_config(args.config, {})
    resolved = {
        "params": config.params.to_dict(),
        "lambda_max_grid": list(config.lambda_grid),
        "schemes": [s.value for s in config.schemes],
        "n_runs": config.n_runs,
        "steps": config.steps,
        "master_seed": config.master_seed,
        "output_dir": str(config.output_dir),
        "emit_steps": config.emit_steps,
        "emit_runs": config.emit_runs,
        "emit_aggregate": config.emit_aggregate,
        "emit_histogram": config.emit_histogram,
        "config_hash": config.config_hash(),
    }
    print(json.dumps(resolved, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levsim",
        description="Leveraged value-investor market simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one (scheme, lambda_max) cell")
    _add_config_options(p_sim, single_cell=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run the full scheme x lambda grid")
    _add_config_options(p_sweep, single_cell=False)
    p_sweep.set_defaults(func=cmd_sweep)

    p_plot = sub.add_parser("plotdata", help="project results to plot series")
    p_plot.add_argument("--out", type=Path, required=True,
                        help="sweep output directory")
    p_plot.add_argument("--kind", type=str, required=True,
                        help=f"one of {sorted(PLOT_KINDS)}")
    p_plot.add_argument("--lambda-max", type=float, default=None,
                        help="required for return_dist")
    p_plot.set_defaults(func=cmd_plotdata)

    p_val = sub.add_parser("validate-config", help="parse and echo a config")
    p_val.add_argument("--config", type=Path, required=True)
    p_val.set_defaults(func=cmd_validate_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
