"""Experiment orchestration: configuration, seeded runs, sweeps over
(scheme, lambda_max) cells, and plot-data projection.

Outputs are comma-separated tables prefixed with '#' manifest lines
(schema, code version, seed rule, config hash) and written atomically.
Cell results are reproducible and independent of worker scheduling: the
seed of run k in a cell is derived only from the master seed, the cell's
lambda_max and k, so the three schemes see identical noise draws and
comparisons across schemes are paired.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .clearing import ClearingFailure
from .metrics import HIST_BINS, RunMetrics, run_metrics
from .params import Scheme, SimParams
from .simulation import RunTrace, Simulation

SCHEMA_VERSION = 1
SEED_RULE = ("ss-v1: SeedSequence(master_seed, spawn_key=(round(1000*lambda_max), "
             "run_index)); schemes share draws")
WORKERS_ENV = "LEVSIM_WORKERS"

SCHEME_ORDER = (Scheme.UNREGULATED, Scheme.BASLE, Scheme.PERFECT_HEDGE)

#: Per-run scalar columns aggregated as mean/std across seeds.
AGG_METRICS = (
    "volatility_index", "return_skewness", "return_excess_kurtosis",
    "avg_volume", "avg_leverage",
    "default_prob_most_aggressive", "default_prob_mean",
    "failure_prob_most_aggressive", "failure_prob_mean",
    "investor_return_most_aggressive", "investor_return_mean",
    "investor_return_windows_most_aggressive",
    "manager_profit_most_aggressive", "manager_profit_mean",
    "bank_losses_annual", "unpaid_premiums_annual",
    "effective_interest_annual", "defaults_total", "failures_total",
)
#: Per-run columns aggregated as the max across seeds.
MAX_METRICS = ("max_clearing_residual", "max_cap_violation", "max_selffin_error")

RUN_FIELDS = ("scheme", "lambda_max", "run_index", "steps") + AGG_METRICS + MAX_METRICS

_RUNNER_KEYS = {
    "lambda_max_grid", "schemes", "n_runs", "steps", "master_seed",
    "output_dir", "emit_steps", "emit_runs", "emit_aggregate",
    "emit_histogram", "workers",
}

PLOT_KINDS = {
    "volatility": "volatility_index",
    "volume": "avg_volume",
    "leverage": "avg_leverage",
    "default_prob": "default_prob_most_aggressive",
    "investor_return": "investor_return_most_aggressive",
    "manager_profit": "manager_profit_most_aggressive",
    "bank_losses": "bank_losses_annual",
    "effective_interest": "effective_interest_annual",
    "return_dist": None,
}


@dataclass
class ExperimentConfig:
    """A sweep: one base parameter set crossed with a lambda_max grid
    and a set of regulation schemes, n_runs seeds per cell."""

    params: SimParams = field(default_factory=SimParams)
    lambda_grid: tuple = tuple(float(x) for x in range(1, 21))
    schemes: tuple = SCHEME_ORDER
    n_runs: int = 20
    steps: int = 50_000
    master_seed: int = 0
    output_dir: Path = Path("levsim-out")
    emit_steps: bool = False
    emit_runs: bool = True
    emit_aggregate: bool = True
    emit_histogram: bool = True
    workers: int | None = None

    def __post_init__(self):
        self.lambda_grid = tuple(float(x) for x in self.lambda_grid)
        self.schemes = tuple(Scheme.parse(s) for s in self.schemes)
        self.output_dir = Path(self.output_dir)
        problems = []
        if not self.lambda_grid:
            problems.append("lambda_max_grid must be non-empty")
        if any(lam < 1.0 for lam in self.lambda_grid):
            problems.append("lambda_max values must be >= 1")
        if not self.schemes:
            problems.append("schemes must be non-empty")
        if len(set(self.schemes)) != len(self.schemes):
            problems.append("schemes must be distinct")
        if self.n_runs < 1:
            problems.append("n_runs must be >= 1")
        if self.steps < self.params.tau + 2:
            problems.append(f"steps must be >= tau + 2 = {self.params.tau + 2}")
        if problems:
            raise ValueError("invalid ExperimentConfig: " + "; ".join(problems))

    def cells(self) -> list:
        return [(scheme, lam) for scheme in self.schemes
                for lam in self.lambda_grid]

    def cell_params(self, scheme: Scheme, lam: float) -> SimParams:
        return self.params.with_updates(scheme=scheme, lambda_max=lam)

    def config_hash(self) -> str:
        payload = {
            "params": self.params.to_dict(),
            "lambda_max_grid": list(self.lambda_grid),
            "schemes": [s.value for s in self.schemes],
            "n_runs": self.n_runs,
            "steps": self.steps,
            "master_seed": self.master_seed,
        }
        # the base scheme/lambda_max are overridden per cell
        payload["params"].pop("scheme", None)
        payload["params"].pop("lambda_max", None)
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def manifest(self) -> dict:
        return {
            "levsim-schema": str(SCHEMA_VERSION),
            "code-version": __version__,
            "seed-rule": SEED_RULE,
            "config-sha256": self.config_hash(),
        }


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from a flat JSON file plus override keys (CLI
    flags).  File keys mirror SimParams field names; runner keys are
    lambda_max_grid, schemes, n_runs, steps, master_seed, output_dir,
    emit_* and workers."""
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError(f"config root must be a JSON object: {path}")
        data.update(loaded)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    runner_kw = {k: data.pop(k) for k in list(data) if k in _RUNNER_KEYS}
    params = SimParams.from_dict(data)
    kwargs = {}
    if "lambda_max_grid" in runner_kw:
        kwargs["lambda_grid"] = tuple(runner_kw.pop("lambda_max_grid"))
    if "schemes" in runner_kw:
        kwargs["schemes"] = tuple(runner_kw.pop("schemes"))
    kwargs.update(runner_kw)
    return ExperimentConfig(params=params, **kwargs)


def child_seed(master_seed: int, lambda_max: float, run_index: int):
    """Documented seed-splitting rule (see SEED_RULE)."""
    key = int(round(1000.0 * float(lambda_max)))
    return np.random.SeedSequence(master_seed, spawn_key=(key, run_index))


def run_simulation_traced(params: SimParams, n_steps: int, seed) -> tuple:
    """One deterministic run: (RunMetrics, RunTrace)."""
    sim = Simulation(params, seed=seed)
    trace = sim.run(n_steps)
    return run_metrics(trace, params), trace


def run_simulation(params: SimParams, n_steps: int, seed) -> RunMetrics:
    """One deterministic run, metrics only."""
    metrics, _ = run_simulation_traced(params, n_steps, seed)
    return metrics


# ---------------------------------------------------------------------------
# table formatting


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv_atomic(path: Path, meta: dict, fieldnames, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row[name]) for name in fieldnames])
    os.replace(tmp, path)


def read_table(path: Path) -> tuple:
    """Read one of our CSV tables: (meta dict, list of row dicts).
    Numeric-looking values are converted to float."""
    meta = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
            else:
                lines.append(line)
    reader = csv.DictReader(lines)
    rows = []
    for raw in reader:
        row = {}
        for key, value in raw.items():
            if key == "scheme":
                row[key] = value
            else:
                try:
                    row[key] = float(value)
                except ValueError:
                    row[key] = value
        rows.append(row)
    return meta, rows


def _row_from_metrics(scheme: Scheme, lam: float, run_index: int, steps: int,
                      rm: RunMetrics) -> dict:
    top = rm.most_aggressive
    nan = float("nan")

    def _pick(arr):
        return float(arr[top]) if top >= 0 else nan

    def _mean(arr):
        return float(np.mean(arr)) if top >= 0 else nan

    return {
        "scheme": scheme.value,
        "lambda_max": float(lam),
        "run_index": run_index,
        "steps": steps,
        "volatility_index": rm.volatility_index,
        "return_skewness": rm.return_skewness,
        "return_excess_kurtosis": rm.return_excess_kurtosis,
        "avg_volume": rm.avg_volume,
        "avg_leverage": rm.avg_leverage,
        "default_prob_most_aggressive": _pick(rm.default_prob_annual),
        "default_prob_mean": _mean(rm.default_prob_annual),
        "failure_prob_most_aggressive": _pick(rm.failure_prob_annual),
        "failure_prob_mean": _mean(rm.failure_prob_annual),
        "investor_return_most_aggressive": _pick(rm.investor_return),
        "investor_return_mean": _mean(rm.investor_return),
        "investor_return_windows_most_aggressive": _pick(rm.investor_return_windows),
        "manager_profit_most_aggressive": _pick(rm.manager_profit),
        "manager_profit_mean": _mean(rm.manager_profit),
        "bank_losses_annual": rm.bank_losses_annual,
        "unpaid_premiums_annual": rm.unpaid_premiums_annual,
        "effective_interest_annual": rm.effective_interest_annual,
        "defaults_total": float(rm.defaults_total),
        "failures_total": float(rm.failures_total),
        "max_clearing_residual": rm.max_clearing_residual,
        "max_cap_violation": rm.max_cap_violation,
        "max_selffin_error": rm.max_selffin_error,
    }


def pool_histograms(hists) -> tuple:
    """Merge per-run histograms onto a common grid over the union range
    (each source bin's mass lands in the target bin holding its
    center).  Total mass stays one."""
    lo = min(float(edges[0]) for _, edges in hists)
    hi = max(float(edges[-1]) for _, edges in hists)
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, HIST_BINS + 1)
    mass = np.zeros(HIST_BINS)
    for m, e in hists:
        centers = 0.5 * (e[:-1] + e[1:])
        idx = np.clip(np.searchsorted(edges, centers, side="right") - 1,
                      0, HIST_BINS - 1)
        np.add.at(mass, idx, m)
    mass /= len(hists)
    return mass, edges


# ---------------------------------------------------------------------------
# sweep execution


def cell_name(scheme: Scheme, lam: float) -> str:
    return f"{scheme.value}_lam{lam:g}"


STEP_FIELDS = ("t", "price", "mispricing", "sigma_hist", "lambda_adapt",
               "defaults", "bank_loss", "unpaid_premiums", "shares_traded",
               "clearing_residual")


def _write_step_trace(path: Path, meta: dict, trace: RunTrace) -> None:
    H = trace.num_funds
    fund_cols = []
    for name in ("demand", "wealth", "leverage", "flow", "cost"):
        fund_cols.extend(f"{name}_{h}" for h in range(H))
    rows = []
    for t in range(trace.n_steps):
        row = {
            "t": t,
            "price": float(trace.price[t]),
            "mispricing": float(trace.mispricing[t]),
            "sigma_hist": float(trace.sigma_hist[t]),
            "lambda_adapt": float(trace.lambda_adapt[t]),
            "defaults": int(trace.defaults[t]),
            "bank_loss": float(trace.bank_loss[t]),
            "unpaid_premiums": float(trace.unpaid_premiums[t]),
            "shares_traded": float(trace.shares_traded[t]),
            "clearing_residual": float(trace.clearing_residual[t]),
        }
        for h in range(H):
            row[f"demand_{h}"] = float(trace.demand[t, h])
            row[f"wealth_{h}"] = float(trace.wealth[t, h])
            row[f"leverage_{h}"] = float(trace.leverage[t, h])
            row[f"flow_{h}"] = float(trace.flows[t, h])
            row[f"cost_{h}"] = float(trace.costs[t, h])
        rows.append(row)
    _write_csv_atomic(path, meta, STEP_FIELDS + tuple(fund_cols), rows)


def _compute_cell(task: tuple):
    """Worker body: all runs of one (scheme, lambda_max) cell."""
    (idx, params, steps, n_runs, master_seed, want_hist, emit_steps,
     steps_dir, meta) = task
    rows = []
    hists = []
    name = cell_name(params.scheme, params.lambda_max)
    try:
        for k in range(n_runs):
            seed = child_seed(master_seed, params.lambda_max, k)
            metrics, trace = run_simulation_traced(params, steps, seed)
            rows.append(_row_from_metrics(params.scheme, params.lambda_max,
                                          k, steps, metrics))
            if want_hist:
                hists.append(metrics.return_histogram)
            if emit_steps and steps_dir is not None:
                _write_step_trace(Path(steps_dir) / f"{name}_run{k}.csv",
                                  meta, trace)
    except ClearingFailure as exc:
        return idx, None, None, f"{type(exc).__name__}: {exc}"
    pooled = pool_histograms(hists) if want_hist and hists else None
    return idx, rows, pooled, None


@dataclass
class SweepResult:
    output_dir: Path
    rows: list
    aggregate_rows: list
    failed_cells: list
    aggregate_path: Path | None = None

    @property
    def ok(self) -> bool:
        return not self.failed_cells


def resolve_workers(config: ExperimentConfig) -> int:
    if config.workers is not None:
        return max(1, int(config.workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def _cell_cached(config: ExperimentConfig, scheme: Scheme, lam: float):
    """Rows previously persisted for a finished cell, or None."""
    name = cell_name(scheme, lam)
    runs_path = config.output_dir / "runs" / f"{name}.csv"
    if not runs_path.exists():
        return None
    if config.emit_histogram and not (config.output_dir / "hist"
                                      / f"{name}.csv").exists():
        return None
    try:
        _, rows = read_table(runs_path)
    except Exception:
        return None
    if len(rows) != config.n_runs:
        return None
    return rows


def sweep(config: ExperimentConfig) -> SweepResult:
    """Run the full grid; resumable per cell and safe to re-run.

    Failed cells (no clearing price) are recorded with diagnostics and
    skipped in the aggregate; the sweep continues.
    """
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    meta = config.manifest()
    cells = config.cells()
    steps_dir = out / "steps" if config.emit_steps else None
    if steps_dir is not None:
        steps_dir.mkdir(parents=True, exist_ok=True)

    cached: dict = {}
    todo = []
    for idx, (scheme, lam) in enumerate(cells):
        rows = _cell_cached(config, scheme, lam)
        if rows is not None:
            cached[idx] = rows
        else:
            todo.append((idx, config.cell_params(scheme, lam), config.steps,
                         config.n_runs, config.master_seed,
                         config.emit_histogram, config.emit_steps,
                         str(steps_dir) if steps_dir else None, meta))

    def persist(idx, rows, hist, error):
        scheme, lam = cells[idx]
        name = cell_name(scheme, lam)
        if error is not None:
            fail_path = out / "runs" / f"{name}.failed.txt"
            fail_path.parent.mkdir(parents=True, exist_ok=True)
            tmp = fail_path.with_name(fail_path.name + ".tmp")
            tmp.write_text(error + "\n", encoding="utf-8")
            os.replace(tmp, fail_path)
            return
        if config.emit_runs:
            _write_csv_atomic(out / "runs" / f"{name}.csv", meta,
                              RUN_FIELDS, rows)
        if config.emit_histogram and hist is not None:
            mass, edges = hist
            hrows = [{"bin_lo": float(edges[i]), "bin_hi": float(edges[i + 1]),
                      "mass": float(mass[i])} for i in range(len(mass))]
            _write_csv_atomic(out / "hist" / f"{name}.csv", meta,
                              ("bin_lo", "bin_hi", "mass"), hrows)

    # cells are persisted as they complete so an interrupted sweep
    # resumes from the finished ones
    results: dict = {}
    workers = resolve_workers(config)
    if workers <= 1 or len(todo) <= 1:
        for task in todo:
            idx, rows, hist, error = _compute_cell(task)
            results[idx] = (rows, error)
            persist(idx, rows, hist, error)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for idx, rows, hist, error in pool.map(_compute_cell, todo):
                results[idx] = (rows, error)
                persist(idx, rows, hist, error)

    all_rows = []
    failed = []
    for idx, (scheme, lam) in enumerate(cells):
        if idx in cached:
            all_rows.extend(cached[idx])
            continue
        rows, error = results[idx]
        if error is not None:
            failed.append((cell_name(scheme, lam), error))
            continue
        all_rows.extend(rows)

    aggregate_rows = _aggregate(config, cells, all_rows, failed)
    aggregate_path = None
    if config.emit_aggregate:
        aggregate_path = out / "aggregate.csv"
        fields = (("scheme", "lambda_max", "n_runs", "steps")
                  + tuple(f"{m}_{s}" for m in AGG_METRICS for s in ("mean", "std"))
                  + MAX_METRICS)
        _write_csv_atomic(aggregate_path, meta, fields, aggregate_rows)
    return SweepResult(output_dir=out, rows=all_rows,
                       aggregate_rows=aggregate_rows, failed_cells=failed,
                       aggregate_path=aggregate_path)


def _aggregate(config, cells, all_rows, failed) -> list:
    failed_names = {name for name, _ in failed}
    by_cell: dict = {}
    for row in all_rows:
        key = (row["scheme"], float(row["lambda_max"]))
        by_cell.setdefault(key, []).append(row)
    out = []
    for scheme, lam in cells:
        if cell_name(scheme, lam) in failed_names:
            continue
        rows = by_cell.get((scheme.value, float(lam)), [])
        if not rows:
            continue
        agg = {"scheme": scheme.value, "lambda_max": float(lam),
               "n_runs": len(rows), "steps": config.steps}
        for m in AGG_METRICS:
            values = np.array([float(r[m]) for r in rows])
            agg[f"{m}_mean"] = float(np.mean(values))
            agg[f"{m}_std"] = float(np.std(values))
        for m in MAX_METRICS:
            agg[m] = float(max(float(r[m]) for r in rows))
        out.append(agg)
    return out


# ---------------------------------------------------------------------------
# plot-data projection


def emit_plot_data(output_dir, kind: str, lambda_max: float | None = None) -> list:
    """Project the aggregate table (or cell histograms) into per-figure
    series files under <output_dir>/plots.  Returns written paths."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; valid kinds: "
                         f"{sorted(PLOT_KINDS)}")
    out = Path(output_dir)
    plots = out / "plots"
    agg_path = out / "aggregate.csv"
    if not agg_path.exists():
        raise FileNotFoundError(f"aggregate table not found: {agg_path}")
    meta, rows = read_table(agg_path)

    schemes = [s for s in SCHEME_ORDER
               if any(r["scheme"] == s.value for r in rows)]
    written = []
    if kind == "return_dist":
        if lambda_max is None:
            raise ValueError("return_dist requires lambda_max")
        for scheme in schemes:
            src = out / "hist" / f"{cell_name(scheme, lambda_max)}.csv"
            if not src.exists():
                raise FileNotFoundError(f"histogram not found: {src}")
            hmeta, hrows = read_table(src)
            path = plots / f"return_dist_lam{lambda_max:g}_{scheme.value}.csv"
            _write_csv_atomic(path, hmeta, ("bin_lo", "bin_hi", "mass"), hrows)
            written.append(path)
        return written

    column = PLOT_KINDS[kind]
    lambdas = sorted({float(r["lambda_max"]) for r in rows})
    lookup = {(r["scheme"], float(r["lambda_max"])): r for r in rows}
    fields = ["lambda_max"]
    for scheme in schemes:
        fields += [f"{scheme.value}_mean", f"{scheme.value}_std"]
    series = []
    for lam in lambdas:
        row = {"lambda_max": lam}
        for scheme in schemes:
            cell = lookup.get((scheme.value, lam))
            row[f"{scheme.value}_mean"] = (float(cell[f"{column}_mean"])
                                           if cell else float("nan"))
            row[f"{scheme.value}_std"] = (float(cell[f"{column}_std"])
                                          if cell else float("nan"))
        series.append(row)
    path = plots / f"{kind}.csv"
    _write_csv_atomic(path, meta, fields, series)
    written.append(path)
    return written
