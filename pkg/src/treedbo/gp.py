"""Exact Gaussian-process regression with a Matern(5/2) ARD kernel.

Supports an optional per-dimension Beta-CDF input warp (inputs are first
normalised to the unit box by the dataset bounds), a constant prior mean,
and jitter-stabilised Cholesky factorisation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.spatial.distance import cdist
from scipy.special import betainc

from . import _fastcore
from .errors import IllConditionedKernelError, InvalidHyperparameterError

SQRT5 = np.sqrt(5.0)

# Jitter policy: always add JITTER_INIT_FRAC * amplitude to the diagonal,
# escalate tenfold on factorisation failure up to JITTER_MAX_FRAC * amplitude.
JITTER_INIT_FRAC = 1e-10
JITTER_MAX_FRAC = 1e-4


@dataclass(frozen=True)
class Hyperparams:
    """One GP's parameters: output scale, ARD length scales, noise, mean.

    ``warp`` is an optional (d, 2) array of Beta-CDF (alpha, beta) rows; when
    present the kernel operates on warped coordinates in the unit box, so the
    length scales are in warped units.  Without it the kernel sees raw inputs.
    """

    amplitude: float
    length_scales: np.ndarray
    noise_var: float
    mean_const: float
    warp: np.ndarray | None = None

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        object.__setattr__(self, "length_scales", ls)
        if self.warp is not None:
            w = np.asarray(self.warp, dtype=float)
            if w.ndim != 2 or w.shape != (ls.size, 2):
                raise InvalidHyperparameterError(
                    f"warp must be ({ls.size}, 2) pairs, got shape {w.shape}")
            object.__setattr__(self, "warp", w)
        self._validate()

    def _validate(self):
        if not (np.isfinite(self.amplitude) and self.amplitude > 0):
            raise InvalidHyperparameterError(f"amplitude must be positive, got {self.amplitude}")
        if not (np.all(np.isfinite(self.length_scales)) and np.all(self.length_scales > 0)):
            raise InvalidHyperparameterError("length scales must be positive and finite")
        if not (np.isfinite(self.noise_var) and self.noise_var >= 0):
            raise InvalidHyperparameterError(f"noise variance must be >= 0, got {self.noise_var}")
        if not np.isfinite(self.mean_const):
            raise InvalidHyperparameterError("mean constant must be finite")
        if self.warp is not None and not (np.all(np.isfinite(self.warp)) and np.all(self.warp > 0)):
            raise InvalidHyperparameterError("warp parameters must be positive and finite")

    @property
    def dim(self) -> int:
        return self.length_scales.size


@dataclass
class Dataset:
    """Observation history: inputs (t, d), outputs (t,), and the box bounds (d, 2)."""

    X: np.ndarray
    y: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        self.bounds = np.asarray(self.bounds, dtype=float)
        if self.X.size == 0:
            self.X = self.X.reshape(0, self.bounds.shape[0])
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
            raise ValueError(f"bounds must be (d, 2), got {self.bounds.shape}")
        if np.any(self.bounds[:, 1] <= self.bounds[:, 0]):
            raise ValueError("every upper bound must exceed its lower bound")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"{self.X.shape[0]} inputs vs {self.y.shape[0]} outputs")
        if self.X.shape[0] and self.X.shape[1] != self.bounds.shape[0]:
            raise ValueError(f"inputs are {self.X.shape[1]}-d but bounds are {self.bounds.shape[0]}-d")
        if self.X.size and (np.any(self.X < self.bounds[:, 0] - 1e-12)
                            or np.any(self.X > self.bounds[:, 1] + 1e-12)):
            raise ValueError("inputs must lie within bounds")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.X[idx], self.y[idx], self.bounds)

    def appended(self, x, y) -> "Dataset":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return Dataset(np.vstack([self.X, x]) if self.n else x,
                       np.append(self.y, y), self.bounds)


def warp_input(x, bounds, hp: Hyperparams):
    """Map inputs into the unit box: affine normalisation by the bounds, then
    the regularised incomplete beta CDF per dimension when warp parameters
    are set (identity otherwise).  Coordinatewise monotone nondecreasing.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    lo = bounds[:, 0]
    width = bounds[:, 1] - bounds[:, 0]
    U = np.clip((X - lo) / width, 0.0, 1.0)
    if hp.warp is not None:
        U = betainc(hp.warp[:, 0], hp.warp[:, 1], U)
    return U[0] if single else U


def kernel(x, x2, hp: Hyperparams) -> float:
    """Matern(5/2) ARD covariance between two (pre-warped) points."""
    dx = (np.asarray(x, dtype=float) - np.asarray(x2, dtype=float)) / hp.length_scales
    s = float(np.dot(dx, dx))
    r = np.sqrt(s)
    return hp.amplitude * np.exp(-SQRT5 * r) * (1.0 + SQRT5 * r + (5.0 / 3.0) * s)


def _kernel_coords(X, bounds, hp: Hyperparams):
    """Coordinates the kernel actually sees: warped when warp is set, raw otherwise."""
    if hp.warp is not None:
        return warp_input(X, bounds, hp)
    return np.asarray(X, dtype=float)


def _matern52_from_sq(sq, amplitude):
    r = np.sqrt(sq)
    return amplitude * np.exp(-SQRT5 * r) * (1.0 + SQRT5 * r + (5.0 / 3.0) * sq)


def _gram(Xk, hp: Hyperparams, diag_add: float):
    Xs = Xk / hp.length_scales
    K = _matern52_from_sq(cdist(Xs, Xs, "sqeuclidean"), hp.amplitude)
    K[np.diag_indices_from(K)] = hp.amplitude + diag_add
    return K


def _cross(Xk, Zk, hp: Hyperparams):
    ls = hp.length_scales
    return _matern52_from_sq(cdist(Xk / ls, Zk / ls, "sqeuclidean"), hp.amplitude)


@dataclass(frozen=True)
class GpPosterior:
    """Immutable fitted GP over one data subset for one hyper-parameter draw.

    ``chol`` is the lower Cholesky factor of K + sigma^2 I + jitter I and
    ``alpha`` solves that matrix against the centred outputs.  Safe to share
    across threads for concurrent prediction.
    """

    data: Dataset
    hp: Hyperparams
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    train_coords: np.ndarray

    def predict(self, x):
        """Posterior mean and (nonnegative) latent variance at one point."""
        mu, var = self.predict_batch(np.atleast_2d(np.asarray(x, dtype=float)))
        return float(mu[0]), float(var[0])

    def predict_batch(self, X):
        Zk = _kernel_coords(X, self.data.bounds, self.hp)
        Ks = _cross(Zk, self.train_coords, self.hp)  # (n, t)
        mu = self.hp.mean_const + Ks @ self.alpha
        V = solve_triangular(self.chol, Ks.T, lower=True, check_finite=False)
        var = self.hp.amplitude - np.einsum("ij,ij->j", V, V)
        return mu, np.maximum(var, 0.0)


def fit(data: Dataset, hp: Hyperparams) -> GpPosterior:
    """Factorise K + sigma^2 I (+ escalating jitter) and precompute weights."""
    if data.n < 1:
        raise ValueError("cannot fit a GP on an empty dataset")
    Xk = _kernel_coords(data.X, data.bounds, hp)
    jitter = JITTER_INIT_FRAC * hp.amplitude
    jitter_max = JITTER_MAX_FRAC * hp.amplitude
    while True:
        K = _gram(Xk, hp, hp.noise_var + jitter)
        try:
            L = np.linalg.cholesky(K)
            break
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > jitter_max * (1.0 + 1e-9):
                raise IllConditionedKernelError(
                    f"kernel matrix not factorisable for t={data.n}", jitter / 10.0)
    alpha = cho_solve((L, True), data.y - hp.mean_const, check_finite=False)
    return GpPosterior(data=data, hp=hp, chol=L, alpha=alpha, jitter=jitter,
                       train_coords=Xk)


def predict(gp: GpPosterior, x):
    """Functional alias for :meth:`GpPosterior.predict`."""
    return gp.predict(x)


def log_marginal_likelihood(data: Dataset, hp: Hyperparams) -> float:
    """log N(y; m, K + sigma^2 I + jitter I) with the centred residual y - m."""
    if data.n < 1:
        raise ValueError("log marginal likelihood needs at least one observation")
    Xk = _kernel_coords(data.X, data.bounds, hp)
    Xs = np.ascontiguousarray(Xk / hp.length_scales)
    llh, jitter = _fastcore.gaussian_loglik(
        Xs, np.ascontiguousarray(data.y), hp.amplitude, hp.noise_var,
        hp.mean_const, JITTER_INIT_FRAC * hp.amplitude, JITTER_MAX_FRAC * hp.amplitude)
    if np.isnan(llh):
        raise IllConditionedKernelError(
            f"kernel matrix not factorisable for t={data.n}", jitter)
    return float(llh)
