"""Synthetic objectives, CSV pool ingestion, and the shipped benchmark manifest.

All registered benchmark objectives follow the minimisation convention; the
optimiser maximises internally, so the harness negates at the boundary.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import PoolLoadError

# ---------------------------------------------------------------------------
# closed-form objectives
# ---------------------------------------------------------------------------

EXP2D_BOUNDS = np.array([[-2.0, 2.0], [-2.0, 2.0]])


def exp2d(x1, x2):
    """x1 * exp(-x1^2 - x2^2): flat over most of the box with one peak and
    one pit that are easy to miss."""
    return x1 * np.exp(-x1 * x1 - x2 * x2)


def _exp2d_min(x):
    return float(exp2d(x[0], x[1]))


# One-dimensional two-regime surface: a broad smooth field on the left half
# and a jagged field of narrow bumps on the right half.  The instance is
# pinned here and in the benchmark manifest together with its derived optimum.
RKHS_SMOOTH_SCALE = 0.1
RKHS_SMOOTH_WEIGHTS = np.array([2.5, 1.8])
RKHS_SMOOTH_CENTERS = np.array([0.18, 0.33])
RKHS_JAGGED_SCALE = 0.01
RKHS_JAGGED_WEIGHTS = np.array([1.4, -1.2, 1.8, -1.4, 2.2, -1.2, 1.6, -1.4,
                                2.0, 3.8, -1.2, 5.9, -1.2, 3.8, -1.4, 1.8,
                                -1.2, 2.2, -1.4, 3.4, -1.2, 2.6, -1.4, 1.8,
                                -1.2])
RKHS_JAGGED_CENTERS = np.array([0.52, 0.54, 0.56, 0.58, 0.60, 0.62, 0.64,
                                0.66, 0.68, 0.70, 0.72, 0.74, 0.76, 0.78,
                                0.80, 0.82, 0.84, 0.86, 0.88, 0.90, 0.92,
                                0.94, 0.96, 0.98, 1.00])


def rkhs_hetero(x):
    """Weighted sum of squared-exponential bumps at two length scales on
    [0, 1]; smooth left half, jagged right half.  Maximisation view."""
    x = np.asarray(x, dtype=float)[..., None]
    smooth = np.sum(RKHS_SMOOTH_WEIGHTS
                    * np.exp(-0.5 * ((x - RKHS_SMOOTH_CENTERS) / RKHS_SMOOTH_SCALE) ** 2),
                    axis=-1)
    jagged = np.sum(RKHS_JAGGED_WEIGHTS
                    * np.exp(-0.5 * ((x - RKHS_JAGGED_CENTERS) / RKHS_JAGGED_SCALE) ** 2),
                    axis=-1)
    out = smooth + jagged
    return float(out) if out.ndim == 0 else out


def _rkhs_min(x):
    return -float(rkhs_hetero(np.asarray(x, dtype=float).reshape(-1)[0]))


# ---------------------------------------------------------------------------
# pool datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnSpec:
    """Names of the feature columns and the single target column."""

    features: tuple
    target: str
    delimiter: str = ","

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))


@dataclass(frozen=True)
class LoadReport:
    n_kept: int
    n_dropped: int


@dataclass
class PoolDataset:
    """Finite candidate set: feature rows, scalar targets, inferred bounds."""

    X: np.ndarray
    targets: np.ndarray
    feature_names: list
    target_name: str
    source: str = ""
    bounds: np.ndarray = field(init=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.targets = np.asarray(self.targets, dtype=float)
        lo = self.X.min(axis=0)
        hi = self.X.max(axis=0)
        flat = hi <= lo
        lo[flat] -= 0.5
        hi[flat] += 0.5
        self.bounds = np.column_stack([lo, hi])

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(self.feature_names) + [self.target_name])
            for row, t in zip(self.X, self.targets):
                w.writerow([repr(float(v)) for v in row] + [repr(float(t))])


def load_pool_csv(path, spec: ColumnSpec):
    """Parse a delimited file into a pool, dropping unusable rows.

    Rows whose target or features are missing or non-numeric (including NaN
    and infinities) are dropped and counted in the returned LoadReport.
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh, delimiter=spec.delimiter)
            if reader.fieldnames is None:
                raise PoolLoadError(f"{path}: empty file")
            missing = [c for c in (*spec.features, spec.target)
                       if c not in reader.fieldnames]
            if missing:
                raise PoolLoadError(f"{path}: missing columns {missing}; "
                                    f"found {reader.fieldnames}")
            rows, targets, dropped = [], [], 0
            for record in reader:
                try:
                    feats = [float(record[c]) for c in spec.features]
                    targ = float(record[spec.target])
                except (TypeError, ValueError):
                    dropped += 1
                    continue
                if not (all(math.isfinite(v) for v in feats) and math.isfinite(targ)):
                    dropped += 1
                    continue
                rows.append(feats)
                targets.append(targ)
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise PoolLoadError(f"{path}: {exc}") from exc
    if not rows:
        raise PoolLoadError(f"{path}: no usable rows ({dropped} dropped)")
    pool = PoolDataset(X=np.array(rows), targets=np.array(targets),
                       feature_names=list(spec.features), target_name=spec.target,
                       source=str(path))
    return pool, LoadReport(n_kept=len(rows), n_dropped=dropped)


# Synthetic stand-in for the drill-hole pools: a smooth deceptive hill on the
# left half and a rugged field of narrow ore bumps on the right half, with a
# single clearly tallest bump as the global optimum.
SYNTH_SEED = 0
SYNTH_ROWS = 2000
_SYNTH_RAMP_AT = 0.55          # roughness switches on for u beyond this
_SYNTH_RAMP_WIDTH = 0.04
# (u, v, height, width) of the rugged bumps; the wide dominant body at
# (0.8081, 0.3321) is the global optimum
_SYNTH_BUMPS = np.array([
    (0.60, 0.15, 1.6, 0.04), (0.62, 0.55, -1.3, 0.04), (0.65, 0.85, 1.8, 0.04),
    (0.70, 0.35, -1.2, 0.04), (0.72, 0.68, 1.9, 0.04), (0.76, 0.10, 1.7, 0.04),
    (0.8081, 0.3321, 3.0, 0.10), (0.82, 0.88, -1.4, 0.04), (0.86, 0.60, 1.9, 0.04),
    (0.90, 0.20, 1.8, 0.04), (0.93, 0.45, -1.3, 0.04), (0.96, 0.75, 1.85, 0.04),
])


def synth_hetero_value(u, v):
    """Target value of the synthetic surface at normalised coordinates."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    smooth = (1.2 * np.exp(-((u - 0.22) ** 2 + (v - 0.70) ** 2) / (2 * 0.18 ** 2))
              + 0.25 * v)
    ramp = 1.0 / (1.0 + np.exp(-(u - _SYNTH_RAMP_AT) / _SYNTH_RAMP_WIDTH))
    pu, pv, h, w = (_SYNTH_BUMPS[:, 0], _SYNTH_BUMPS[:, 1],
                    _SYNTH_BUMPS[:, 2], _SYNTH_BUMPS[:, 3])
    d2 = ((u[..., None] - pu) ** 2 + (v[..., None] - pv) ** 2)
    rough = np.sum(h * np.exp(-d2 / (2 * w ** 2)), axis=-1)
    return smooth + ramp * rough


def synth_hetero_surface(seed: int = SYNTH_SEED) -> PoolDataset:
    """2,000-row 2-D pool over the unit square; deterministic given the seed."""
    rng = np.random.default_rng([seed])
    UV = rng.uniform(0.0, 1.0, size=(SYNTH_ROWS, 2))
    targets = synth_hetero_value(UV[:, 0], UV[:, 1])
    return PoolDataset(X=UV, targets=targets, feature_names=["u", "v"],
                       target_name="grade", source=f"synth_hetero(seed={seed})")


# ---------------------------------------------------------------------------
# objective registry and manifest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Optimum:
    x: tuple
    value: float
    provenance: str


@dataclass(frozen=True)
class ObjectiveSpec:
    """A benchmark problem in minimisation view.

    Continuous problems carry a closed-form ``fn``; pool problems carry the
    finite candidate set and ``fn`` is only defined on its rows.
    """

    name: str
    dim: int
    bounds: np.ndarray
    fn: object
    known_optimum: Optimum | None = None
    pool: PoolDataset | None = None


def load_manifest() -> dict:
    """The shipped benchmark manifest: coefficients, bounds, derived optima."""
    with resources.files("treedbo").joinpath("benchmark_manifest.json").open() as fh:
        return json.load(fh)


def _neg_pool_target(pool: PoolDataset):
    """Pool targets are grades to maximise; negate for the min convention."""

    def fn(x):
        hits = np.flatnonzero(np.all(pool.X == np.asarray(x, dtype=float), axis=1))
        if hits.size == 0:
            raise ValueError(f"{x} is not a pool row")
        return -float(pool.targets[hits[0]])

    return fn


def list_objectives() -> tuple:
    return ("exp2d", "rkhs", "synth_hetero")


def get_objective(name: str) -> ObjectiveSpec:
    manifest = load_manifest()
    if name == "exp2d":
        opt = manifest["exp2d"]["minimum"]
        return ObjectiveSpec(name="exp2d", dim=2, bounds=EXP2D_BOUNDS.copy(),
                             fn=_exp2d_min,
                             known_optimum=Optimum(tuple(opt["x"]), opt["value"],
                                                   opt["oracle"]))
    if name == "rkhs":
        opt = manifest["rkhs"]["benchmark_minimum"]
        return ObjectiveSpec(name="rkhs", dim=1, bounds=np.array([[0.0, 1.0]]),
                             fn=_rkhs_min,
                             known_optimum=Optimum(tuple(opt["x"]), opt["value"],
                                                   opt["oracle"]))
    if name == "synth_hetero":
        pool = synth_hetero_surface()
        entry = manifest["synth_hetero"]
        row = entry["argmax_row"]
        return ObjectiveSpec(name="synth_hetero", dim=2, bounds=pool.bounds,
                             fn=_neg_pool_target(pool),
                             known_optimum=Optimum(tuple(pool.X[row]),
                                                   -entry["argmax_value"],
                                                   entry["oracle"]),
                             pool=pool)
    raise ValueError(f"unknown objective {name!r}; valid names: {', '.join(list_objectives())}")
