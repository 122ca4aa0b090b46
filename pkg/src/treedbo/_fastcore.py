"""JIT-compiled inner loops for the hyper-parameter posterior.

Slice sampling evaluates the weighted likelihood tens of thousands of times
per optimisation step, so the Gram-matrix build, Cholesky factorisation and
triangular solve are fused into single compiled calls.  When numba is not
installed the module falls back to vectorised numpy; results agree to
float64 round-off either way.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


_SQRT5 = np.sqrt(5.0)


_FASTMATH = {"contract", "reassoc"}  # keeps NaN/Inf semantics intact


if HAVE_NUMBA:

    @njit(cache=True, fastmath=_FASTMATH)
    def matern52_gram(Xs, amplitude, diag_add):
        """Gram matrix on inputs already divided by their length scales.

        diag_add is the noise variance plus jitter added to the diagonal.
        """
        n, d = Xs.shape
        K = np.empty((n, n))
        for i in range(n):
            K[i, i] = amplitude + diag_add
            for j in range(i + 1, n):
                s = 0.0
                for k in range(d):
                    t = Xs[i, k] - Xs[j, k]
                    s += t * t
                r = np.sqrt(s)
                v = amplitude * np.exp(-_SQRT5 * r) * (1.0 + _SQRT5 * r + (5.0 / 3.0) * s)
                K[i, j] = v
                K[j, i] = v
        return K

    @njit(cache=True, fastmath=_FASTMATH)
    def _cholesky_lower(K):
        """In-place lower Cholesky; False when a pivot is not strictly positive."""
        n = K.shape[0]
        for j in range(n):
            s = K[j, j]
            for k in range(j):
                s -= K[j, k] * K[j, k]
            if not (s > 0.0 and np.isfinite(s)):
                return False
            pivot = np.sqrt(s)
            K[j, j] = pivot
            for i in range(j + 1, n):
                t = K[i, j]
                for k in range(j):
                    t -= K[i, k] * K[j, k]
                K[i, j] = t / pivot
        return True

    @njit(cache=True)
    def _factorise(K):
        """Lower Cholesky of K, or None.  LAPACK pays off above ~50 rows."""
        if K.shape[0] >= 48:
            try:
                return np.linalg.cholesky(K)
            except Exception:
                return None
        if _cholesky_lower(K):
            return K
        return None

    @njit(cache=True, fastmath=_FASTMATH)
    def _quad_logdet(L, y, mean_const):
        n = L.shape[0]
        quad = 0.0
        logdet = 0.0
        z = np.empty(n)
        for i in range(n):
            s = y[i] - mean_const
            for k in range(i):
                s -= L[i, k] * z[k]
            z[i] = s / L[i, i]
            quad += z[i] * z[i]
            logdet += np.log(L[i, i])
        return quad, logdet

    @njit(cache=True)
    def gaussian_loglik(Xs, y, amplitude, noise_var, mean_const, jitter0, jitter_max):
        """Log marginal likelihood of one GP factor, with jitter escalation.

        Returns (llh, jitter_used); llh is NaN when factorisation still fails
        at jitter_max.
        """
        n = Xs.shape[0]
        jitter = jitter0
        L = _factorise(matern52_gram(Xs, amplitude, noise_var + jitter))
        while L is None:
            jitter *= 10.0
            if jitter > jitter_max * (1.0 + 1e-9):
                return np.nan, jitter / 10.0
            L = _factorise(matern52_gram(Xs, amplitude, noise_var + jitter))
        quad, logdet = _quad_logdet(L, y, mean_const)
        return -0.5 * quad - logdet - 0.5 * n * np.log(2.0 * np.pi), jitter

    @njit(cache=True)
    def weighted_loglik(Xs_all, y_all, offsets, weights, amplitude, noise_var,
                        mean_const, jitter0, jitter_max):
        """Sum of weighted factor log likelihoods over concatenated blocks.

        Factor f occupies rows offsets[f]:offsets[f+1].  Returns NaN as soon
        as any factor is unfactorisable, signalling a rejected state.
        """
        total = 0.0
        for f in range(offsets.shape[0] - 1):
            a = offsets[f]
            b = offsets[f + 1]
            llh, _ = gaussian_loglik(Xs_all[a:b], y_all[a:b], amplitude,
                                     noise_var, mean_const, jitter0, jitter_max)
            if np.isnan(llh):
                return np.nan
            total += weights[f] * llh
        return total

else:  # pragma: no cover - exercised only without numba

    def matern52_gram(Xs, amplitude, diag_add):
        diff = Xs[:, None, :] - Xs[None, :, :]
        s = np.einsum("ijk,ijk->ij", diff, diff)
        r = np.sqrt(s)
        K = amplitude * np.exp(-_SQRT5 * r) * (1.0 + _SQRT5 * r + (5.0 / 3.0) * s)
        K[np.diag_indices_from(K)] = amplitude + diag_add
        return K

    def gaussian_loglik(Xs, y, amplitude, noise_var, mean_const, jitter0, jitter_max):
        n = Xs.shape[0]
        jitter = jitter0
        while True:
            K = matern52_gram(Xs, amplitude, noise_var + jitter)
            try:
                L = np.linalg.cholesky(K)
                break
            except np.linalg.LinAlgError:
                jitter *= 10.0
                if jitter > jitter_max * (1.0 + 1e-9):
                    return np.nan, jitter / 10.0
        from scipy.linalg import solve_triangular

        z = solve_triangular(L, y - mean_const, lower=True, check_finite=False)
        llh = -0.5 * z @ z - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi)
        return llh, jitter

    def weighted_loglik(Xs_all, y_all, offsets, weights, amplitude, noise_var,
                        mean_const, jitter0, jitter_max):
        total = 0.0
        for f in range(offsets.shape[0] - 1):
            a, b = offsets[f], offsets[f + 1]
            llh, _ = gaussian_loglik(Xs_all[a:b], y_all[a:b], amplitude,
                                     noise_var, mean_const, jitter0, jitter_max)
            if np.isnan(llh):
                return np.nan
            total += weights[f] * llh
        return total


def warmup():
    """Trigger JIT compilation so the first optimisation step is not slowed."""
    Xs = np.array([[0.0], [0.5], [1.0]])
    y = np.array([0.0, 1.0, 0.5])
    offsets = np.array([0, 3], dtype=np.int64)
    weights = np.array([2.0])
    weighted_loglik(Xs, y, offsets, weights, 1.0, 0.1, 0.0, 1e-10, 1e-4)
