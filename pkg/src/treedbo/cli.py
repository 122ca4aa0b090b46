"""Command-line harness: configure, run, summarise and export experiments.

Benchmark objectives follow the minimisation convention, so trace files and
summaries report negated internal (maximisation) quantities.  Outputs are
deterministic given a seed, except the wall_time column.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import benchmarks
from .errors import TreedboError
from .optimize import (OptimizerConfig, RepeatSummary, Trace, minimization_view,
                       run_repeated)

DEFAULT_OUT_ENV = "TREEDBO_OUT"


class UsageError(Exception):
    """Bad invocation: reported on stderr with exit status 2."""


@dataclass
class ExperimentConfig:
    objective: str | None = None
    csv: str | None = None
    target_col: str | None = None
    feature_cols: list = field(default_factory=list)
    variants: list = field(default_factory=lambda: ["htbo"])
    iters: int = 50
    repeats: int = 1
    seed: int = 0
    out: str | None = None
    min_leaf: int = 5
    sobol_count: int = 20_000
    hyper_samples: int = 10
    burn_in: int = 30

    def save(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        raw = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)} in {path}")
        return cls(**raw)

    def resolved_out(self) -> Path:
        root = self.out or os.environ.get(DEFAULT_OUT_ENV) or "treedbo_out"
        return Path(root)


def _resolve_objective(cfg: ExperimentConfig) -> benchmarks.ObjectiveSpec:
    if cfg.csv:
        if not cfg.target_col or not cfg.feature_cols:
            raise UsageError("--csv requires --target-col and --feature-cols")
        spec = benchmarks.ColumnSpec(features=tuple(cfg.feature_cols),
                                     target=cfg.target_col)
        try:
            pool, report = benchmarks.load_pool_csv(cfg.csv, spec)
        except TreedboError as exc:
            raise UsageError(str(exc)) from exc
        if report.n_dropped:
            print(f"note: dropped {report.n_dropped} unusable rows from {cfg.csv}",
                  file=sys.stderr)
        return benchmarks.ObjectiveSpec(
            name=Path(cfg.csv).stem, dim=pool.dim, bounds=pool.bounds,
            fn=benchmarks._neg_pool_target(pool), pool=pool)
    if not cfg.objective:
        raise UsageError("either --objective or --csv is required")
    try:
        return benchmarks.get_objective(cfg.objective)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


class _Negated:
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, x):
        return -self.fn(x)


def _write_trace(path: Path, trace: Trace, dim: int):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter"] + [f"x{k}" for k in range(dim)] + ["y", "incumbent", "wall_time"])
        for r in trace.records:
            w.writerow([r.iteration] + [repr(float(v)) for v in r.x]
                       + [repr(r.y), repr(r.incumbent), f"{r.wall_time:.6f}"])


def _min_view_summary(traces) -> RepeatSummary:
    finals = np.array([t.best_value for t in traces]) if traces else np.array([np.nan])
    return RepeatSummary(mean=float(np.mean(finals)), std=float(np.std(finals)),
                         min=float(np.min(finals)), max=float(np.max(finals)),
                         n_runs=len(traces), n_failed=0)


def cmd_run(cfg: ExperimentConfig) -> int:
    spec = _resolve_objective(cfg)
    out = cfg.resolved_out()
    out.mkdir(parents=True, exist_ok=True)
    results = {"objective": spec.name, "iters": cfg.iters, "repeats": cfg.repeats,
               "seed": cfg.seed, "variants": {}}
    summary_rows = []
    for variant in cfg.variants:
        try:
            ocfg = OptimizerConfig(
                variant=variant, min_leaf=cfg.min_leaf,
                n_hyper_samples=cfg.hyper_samples, burn_in=cfg.burn_in,
                sobol_count=cfg.sobol_count, max_iters=cfg.iters, seed=cfg.seed,
                mode="pool" if spec.pool is not None else "continuous")
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if spec.pool is not None:
            traces, reps = run_repeated(None, ocfg, cfg.repeats, pool=spec.pool)
        else:
            traces, reps = run_repeated(_Negated(spec.fn), ocfg, cfg.repeats,
                                        bounds=spec.bounds)
        traces = [minimization_view(t) for t in traces]
        for r, t in enumerate(traces):
            _write_trace(out / f"{spec.name}_{variant}_rep{r:02d}.csv", t, spec.dim)
        s = _min_view_summary(traces)
        s = RepeatSummary(mean=s.mean, std=s.std, min=s.min, max=s.max,
                          n_runs=s.n_runs, n_failed=reps.n_failed)
        summary_rows.append((variant, s))
        results["variants"][variant] = {
            "mean": s.mean, "std": s.std, "min": s.min, "max": s.max,
            "n_runs": s.n_runs, "n_failed": s.n_failed}
        print(f"{spec.name} {variant}: final {s.mean:.6f} +- {s.std:.6f} "
              f"({s.n_runs} runs, {s.n_failed} failed)")
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["objective", "variant", "n_runs", "n_failed",
                    "mean_final", "std_final", "min_final", "max_final"])
        for variant, s in summary_rows:
            w.writerow([spec.name, variant, s.n_runs, s.n_failed,
                        repr(s.mean), repr(s.std), repr(s.min), repr(s.max)])
    (out / "results.json").write_text(json.dumps(results, indent=2) + "\n")
    return 0


def cmd_plotdata(run_dir, out_dir=None) -> int:
    """Per-variant mean/std incumbent series from a completed run directory."""
    run_dir = Path(run_dir)
    results_path = run_dir / "results.json"
    if not results_path.exists():
        raise TreedboError(f"{results_path} not found; is this a run directory?")
    results = json.loads(results_path.read_text())
    name = results["objective"]
    out = Path(out_dir) if out_dir else run_dir
    out.mkdir(parents=True, exist_ok=True)
    missing = []
    series = {}
    for variant in results["variants"]:
        incs = []
        for r in range(results["repeats"]):
            path = run_dir / f"{name}_{variant}_rep{r:02d}.csv"
            if not path.exists():
                missing.append(str(path))
                continue
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(fh))
            incs.append([float(row["incumbent"]) for row in rows])
        if incs:
            series[variant] = np.array(incs)
    if missing:
        raise TreedboError("missing trace files: " + ", ".join(missing))
    plot_path = out / f"plot_{name}.csv"
    with open(plot_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "iter", "mean", "std"])
        for variant, arr in series.items():
            mean = arr.mean(axis=0)
            std = arr.std(axis=0)
            for it in range(arr.shape[1]):
                w.writerow([variant, it, repr(float(mean[it])), repr(float(std[it]))])
    print(f"wrote {plot_path}")
    return 0


def cmd_validate() -> int:
    """Fast user-facing self-test of the numerical core."""
    from . import validate as _validate

    return _validate.run_checks()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="treedbo",
                                description="Treed GP Bayesian optimisation benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run one objective under one or more variants")
    pr.add_argument("--config", help="JSON experiment config; flags override it")
    pr.add_argument("--objective", help="built-in objective name")
    pr.add_argument("--csv", help="pool-mode CSV file")
    pr.add_argument("--target-col", dest="target_col")
    pr.add_argument("--feature-cols", dest="feature_cols",
                    help="comma-separated feature column names")
    pr.add_argument("--variant", action="append", dest="variants",
                    choices=["bo", "bo_warp", "htbo", "htbo_warp"])
    pr.add_argument("--iters", type=int)
    pr.add_argument("--repeats", type=int)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--out")
    pr.add_argument("--min-leaf", dest="min_leaf", type=int)
    pr.add_argument("--sobol-count", dest="sobol_count", type=int)
    pr.add_argument("--hyper-samples", dest="hyper_samples", type=int)
    pr.add_argument("--burn-in", dest="burn_in", type=int)

    pp = sub.add_parser("plotdata", help="mean/std incumbent series from a run directory")
    pp.add_argument("run_dir")
    pp.add_argument("--out")

    sub.add_parser("validate", help="run the fast invariant self-test")
    return p


def _config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config") and v is not None}
    if "feature_cols" in overrides:
        overrides["feature_cols"] = [c for c in overrides["feature_cols"].split(",") if c]
    for k, v in overrides.items():
        setattr(cfg, k, v)
    if cfg.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    if cfg.seed < 0:
        raise UsageError("--seed must be >= 0")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_config_from_args(args))
        if args.command == "plotdata":
            return cmd_plotdata(args.run_dir, args.out)
        return cmd_validate()
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TreedboError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
