"""Expected improvement over the fitted tree and candidate-set generation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr
from scipy.stats import qmc

from .errors import PoolExhausted, UnfittedLeafError
from .tree import TreeNode, assign_leaves, route

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def expected_improvement(mu, sigma, incumbent):
    """Closed-form EI for maximisation: sigma * (z Phi(z) + phi(z)).

    Zero wherever sigma is zero.  Accepts scalars or arrays.
    """
    mu_a, sigma_a = np.broadcast_arrays(np.asarray(mu, dtype=float),
                                        np.asarray(sigma, dtype=float))
    scalar = mu_a.ndim == 0
    mu_a = np.atleast_1d(mu_a)
    sigma_a = np.atleast_1d(sigma_a)
    out = np.zeros(mu_a.shape)
    pos = sigma_a > 0
    z = (mu_a[pos] - incumbent) / sigma_a[pos]
    phi = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out[pos] = np.maximum(sigma_a[pos] * (z * ndtr(z) + phi), 0.0)
    return float(out[0]) if scalar else out


def _ensemble_ei(leaf, X, incumbent):
    """EI averaged over a leaf's hyper-parameter ensemble at rows of X."""
    if not leaf.ensemble:
        raise UnfittedLeafError("leaf has no fitted GP ensemble")
    acc = np.zeros(X.shape[0])
    for gp in leaf.ensemble:
        mu, var = gp.predict_batch(X)
        acc += expected_improvement(mu, np.sqrt(var), incumbent)
    return acc / len(leaf.ensemble)


def ei_over_tree(tree: TreeNode, x, incumbent: float) -> float:
    """Route x to its leaf and average EI over that leaf's ensemble."""
    leaf = route(tree, x)
    return float(_ensemble_ei(leaf, np.atleast_2d(np.asarray(x, dtype=float)), incumbent)[0])


def ei_batch(tree: TreeNode, X, incumbent: float) -> np.ndarray:
    """Vectorised ei_over_tree for many candidate rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(X.shape[0])
    for leaf, mask in assign_leaves(tree, X):
        if np.any(mask):
            out[mask] = _ensemble_ei(leaf, X[mask], incumbent)
    return out


@dataclass
class CandidateSet:
    """Candidate query points: a quasi-random grid or the unqueried pool rows."""

    points: np.ndarray
    kind: str                                   # "sobol" | "pool"
    row_ids: np.ndarray | None = None           # pool rows, parallel to points
    _queried: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_sobol(cls, bounds, count: int, seed=None) -> "CandidateSet":
        return cls(points=sobol_candidates(bounds, count, seed), kind="sobol")

    @classmethod
    def from_pool(cls, pool, queried: np.ndarray) -> "CandidateSet":
        """Unqueried rows of a pool; ``queried`` is the shared boolean mask."""
        keep = np.flatnonzero(~queried)
        return cls(points=pool.X[keep], kind="pool", row_ids=keep, _queried=queried)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def mark_queried(self, row_id: int):
        if self._queried is not None:
            self._queried[row_id] = True


def next_query(tree: TreeNode, candidates: CandidateSet, incumbent: float):
    """Candidate with maximal tree EI; ties resolve to the first occurrence.

    Returns (point, row_id); row_id is None for grid candidates.  In pool
    mode the chosen row is marked queried.
    """
    if candidates.n == 0:
        raise PoolExhausted("no candidates remain")
    scores = ei_batch(tree, candidates.points, incumbent)
    k = int(np.argmax(scores))
    row_id = None
    if candidates.kind == "pool":
        row_id = int(candidates.row_ids[k])
        candidates.mark_queried(row_id)
    return candidates.points[k].copy(), row_id


def sobol_candidates(bounds, count: int, seed=None) -> np.ndarray:
    """First ``count`` points of a Sobol sequence mapped affinely into bounds.

    ``seed=None`` gives the unscrambled sequence with the all-zeros point
    skipped (so the first point is the box centre); an integer seed applies
    Owen scrambling.  Deterministic either way.
    """
    bounds = np.asarray(bounds, dtype=float)
    if count < 1:
        raise ValueError("count must be >= 1")
    with warnings.catch_warnings():
        # the candidate count is a design parameter, not necessarily 2^k
        warnings.simplefilter("ignore", UserWarning)
        if seed is None:
            eng = qmc.Sobol(d=bounds.shape[0], scramble=False)
            eng.fast_forward(1)
        else:
            eng = qmc.Sobol(d=bounds.shape[0], scramble=True, seed=seed)
        u = eng.random(count)
    return bounds[:, 0] + u * (bounds[:, 1] - bounds[:, 0])
