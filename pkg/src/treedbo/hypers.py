"""Per-leaf hyper-parameter posteriors.

Each leaf targets a depth-weighted product of GP likelihood factors along its
root path (leaf factor squared, ancestor weights decaying harmonically) times
a prior, sampled by univariate slice sampling over log-transformed positive
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from . import _fastcore
from .errors import ChainInitError, IllConditionedKernelError
from .gp import JITTER_INIT_FRAC, JITTER_MAX_FRAC, Dataset, Hyperparams, log_marginal_likelihood
from .tree import PathInfo

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PriorSpec:
    """Distribution of one scalar hyper-parameter.

    dist "lognormal": the value is positive and sampled on its log scale,
    where its density is normal(mu, sigma).  dist "normal": sampled raw.
    """

    dist: str
    mu: float
    sigma: float

    def __post_init__(self):
        if self.dist not in ("lognormal", "normal"):
            raise ValueError(f"unknown prior family {self.dist!r}")
        if not self.sigma > 0:
            raise ValueError("prior scale must be positive")

    def logpdf_packed(self, u: float) -> float:
        """Log density in the sampling coordinate (log scale for lognormal)."""
        z = (u - self.mu) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - 0.5 * _LOG_2PI

    def natural(self, u: float) -> float:
        return math.exp(u) if self.dist == "lognormal" else u

    def packed(self, value: float) -> float:
        return math.log(value) if self.dist == "lognormal" else value


@dataclass(frozen=True)
class HyperPrior:
    """Independent priors for every scalar in one leaf's parameter vector.

    Packed order: log amplitude, log length scales (d), log noise variance,
    mean constant, then log warp alphas and log warp betas when warping is on.
    """

    amplitude: PriorSpec
    length_scales: tuple
    noise_var: PriorSpec
    mean_const: PriorSpec
    warp_alpha: tuple | None = None
    warp_beta: tuple | None = None

    @property
    def warp_enabled(self) -> bool:
        return self.warp_alpha is not None

    @property
    def dim(self) -> int:
        return len(self.length_scales)

    def specs(self) -> list:
        out = [self.amplitude, *self.length_scales, self.noise_var, self.mean_const]
        if self.warp_enabled:
            out.extend(self.warp_alpha)
            out.extend(self.warp_beta)
        return out

    def log_pdf(self, u) -> float:
        return float(sum(s.logpdf_packed(v) for s, v in zip(self.specs(), u)))

    def pack(self, hp: Hyperparams) -> np.ndarray:
        vals = [hp.amplitude, *hp.length_scales, hp.noise_var, hp.mean_const]
        if self.warp_enabled:
            vals.extend(hp.warp[:, 0])
            vals.extend(hp.warp[:, 1])
        return np.array([s.packed(v) for s, v in zip(self.specs(), vals)])

    def unpack(self, u) -> Hyperparams:
        d = self.dim
        vals = [s.natural(v) for s, v in zip(self.specs(), u)]
        warp = None
        if self.warp_enabled:
            warp = np.column_stack([vals[d + 3:2 * d + 3], vals[2 * d + 3:]])
        return Hyperparams(amplitude=vals[0], length_scales=np.array(vals[1:d + 1]),
                           noise_var=vals[d + 1], mean_const=vals[d + 2], warp=warp)

    def center_packed(self) -> np.ndarray:
        return np.array([s.mu for s in self.specs()])


def default_prior(ranges, y, warp: bool = False) -> HyperPrior:
    """Weakly informative prior scaled to the data and the input ranges.

    ``ranges`` are the per-dimension widths of the space the kernel sees
    (bound widths raw, or ones when a warp maps inputs to the unit box).
    """
    y = np.asarray(y, dtype=float)
    var_y = max(float(np.var(y)), 1e-12)
    std_y = max(float(np.std(y)), 1e-6)
    d = len(ranges)
    prior = HyperPrior(
        amplitude=PriorSpec("lognormal", math.log(var_y), 1.0),
        length_scales=tuple(PriorSpec("lognormal", math.log(0.5 * r), 1.0) for r in ranges),
        noise_var=PriorSpec("lognormal", math.log(1e-2 * var_y), 2.0),
        mean_const=PriorSpec("normal", float(np.mean(y)), std_y),
        warp_alpha=tuple(PriorSpec("lognormal", 0.0, 0.75) for _ in range(d)) if warp else None,
        warp_beta=tuple(PriorSpec("lognormal", 0.0, 0.75) for _ in range(d)) if warp else None,
    )
    return prior


@dataclass
class WeightedFactor:
    """One likelihood factor: a data subset and its depth-derived weight."""

    data: Dataset
    weight: float


def path_weights(leaf_depth: int, node_depths) -> np.ndarray:
    """w = 2 / (1 + leaf_depth - node_depth) for each node on the path."""
    depths = np.asarray(node_depths, dtype=float)
    if np.any(depths > leaf_depth) or np.any(depths < 0):
        raise ValueError("node depths must lie in [0, leaf_depth]")
    return 2.0 / (1.0 + leaf_depth - depths)


def leaf_factors(data: Dataset, path: PathInfo) -> list:
    """Weighted factors for one leaf: its own data (weight 2) plus each
    nonempty ancestor exclusion set."""
    leaf = path.nodes[0]
    weights = path_weights(leaf.depth, [n.depth for n in path.nodes])
    factors = [WeightedFactor(data.subset(leaf.indices), float(weights[0]))]
    for w, excl in zip(weights[1:], path.exclusions):
        if excl.size:
            factors.append(WeightedFactor(data.subset(excl), float(w)))
    return factors


def weighted_log_posterior(theta: Hyperparams, factors, prior: HyperPrior | None = None) -> float:
    """log p(theta) + sum of weight * log marginal likelihood per factor.

    Ill-conditioned factors reject the state (-inf) rather than raising.  A
    None prior contributes nothing (improper flat prior, used by tests).
    """
    total = prior.log_pdf(prior.pack(theta)) if prior is not None else 0.0
    for f in factors:
        try:
            total += f.weight * log_marginal_likelihood(f.data, theta)
        except IllConditionedKernelError:
            return -np.inf
    return total if np.isfinite(total) else -np.inf


def _fast_posterior_fn(factors, prior: HyperPrior):
    """Compiled-path evaluator of the weighted log posterior over the packed
    parameter vector; numerically equivalent to weighted_log_posterior."""
    X_all = np.ascontiguousarray(np.vstack([f.data.X for f in factors]))
    y_all = np.ascontiguousarray(np.concatenate([f.data.y for f in factors]))
    sizes = [f.data.n for f in factors]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    weights = np.array([f.weight for f in factors])
    bounds = factors[0].data.bounds
    d = prior.dim
    specs = prior.specs()
    prior_mu = np.array([s.mu for s in specs])
    prior_sig = np.array([s.sigma for s in specs])
    prior_norm = -float(np.sum(np.log(prior_sig))) - 0.5 * len(specs) * _LOG_2PI
    use_warp = prior.warp_enabled
    if use_warp:
        lo = bounds[:, 0]
        U_all = np.clip((X_all - lo) / (bounds[:, 1] - lo), 0.0, 1.0)

    def log_target(u):
        z = (u - prior_mu) / prior_sig
        lp = prior_norm - 0.5 * float(z @ z)
        amp = math.exp(u[0])
        ls = np.exp(u[1:d + 1])
        noise = math.exp(u[d + 1])
        mean = u[d + 2]
        if use_warp:
            Xk = betainc(np.exp(u[d + 3:2 * d + 3]), np.exp(u[2 * d + 3:]), U_all)
        else:
            Xk = X_all
        ll = _fastcore.weighted_loglik(
            np.ascontiguousarray(Xk / ls), y_all, offsets, weights,
            amp, noise, mean, JITTER_INIT_FRAC * amp, JITTER_MAX_FRAC * amp)
        if np.isnan(ll):
            return -np.inf
        out = lp + ll
        return out if np.isfinite(out) else -np.inf

    return log_target


def slice_sample(log_density, init, n_samples: int, n_burn: int = 0, seed=None,
                 step=1.0, max_stepout: int = 100):
    """Univariate slice sampling with stepping-out and shrinkage.

    Coordinates are updated in a fixed order, one full sweep per retained
    sample after ``n_burn`` discarded sweeps.  Deterministic given the seed.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    k = x.size
    widths = np.broadcast_to(np.asarray(step, dtype=float), (k,))
    fx = float(log_density(x))
    if not np.isfinite(fx):
        raise ChainInitError(f"log density is {fx} at the initial state")
    out = np.empty((n_samples, k))
    for sweep in range(n_burn + n_samples):
        for j in range(k):
            level = fx - rng.standard_exponential()
            w = widths[j]
            left = x[j] - w * rng.uniform()
            right = left + w

            def at(v):
                xp = x.copy()
                xp[j] = v
                return float(log_density(xp))

            steps = max_stepout
            f_left = at(left)
            while f_left > level and steps > 0:
                left -= w
                f_left = at(left)
                steps -= 1
            steps = max_stepout
            f_right = at(right)
            while f_right > level and steps > 0:
                right += w
                f_right = at(right)
                steps -= 1
            for _ in range(1000):
                candidate = rng.uniform(left, right)
                f_cand = at(candidate)
                if f_cand > level:
                    x[j] = candidate
                    fx = f_cand
                    break
                if candidate < x[j]:
                    left = candidate
                else:
                    right = candidate
            else:
                raise RuntimeError("slice shrank to the current point without acceptance")
        if sweep >= n_burn:
            out[sweep - n_burn] = x
    return out


def infer_leaf_hypers(factors, prior: HyperPrior, n_samples: int = 10,
                      n_burn: int = 30, seed=None) -> list:
    """Posterior hyper-parameter draws for one leaf's weighted factors.

    Samples the packed log-space vector with the compiled posterior, starting
    from the prior centres.
    """
    if not factors or factors[0].data.n == 0:
        raise ValueError("the leaf factor must be nonempty")
    target = _fast_posterior_fn(factors, prior)
    draws = slice_sample(target, prior.center_packed(), n_samples, n_burn, seed)
    return [prior.unpack(u) for u in draws]
