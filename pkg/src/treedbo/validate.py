"""Fast user-facing self-test: kernel oracles, EI spot checks, split invariants.

Each check prints one PASS/FAIL line; the exit status is 0 only if all pass.
"""

from __future__ import annotations

import numpy as np

from .acquisition import expected_improvement
from .gp import Dataset, Hyperparams, fit, kernel, log_marginal_likelihood
from .hypers import path_weights
from .tree import Internal, Leaf, build_tree, leaves


def _gp_oracle_check(rng) -> bool:
    for _ in range(20):
        t, d = rng.integers(2, 12), rng.integers(1, 4)
        X = rng.uniform(0, 1, size=(t, d))
        y = rng.normal(size=t)
        hp = Hyperparams(amplitude=float(rng.uniform(0.5, 2.0)),
                         length_scales=rng.uniform(0.3, 1.5, size=d),
                         noise_var=float(rng.uniform(0.01, 0.1)),
                         mean_const=float(rng.normal()))
        data = Dataset(X, y, np.array([[0.0, 1.0]] * d))
        gp = fit(data, hp)
        K = np.array([[kernel(a, b, hp) for b in X] for a in X])
        K[np.diag_indices_from(K)] += hp.noise_var + gp.jitter
        Ki = np.linalg.inv(K)
        z = rng.uniform(0, 1, size=d)
        ks = np.array([kernel(z, a, hp) for a in X])
        mu_ref = hp.mean_const + ks @ Ki @ (y - hp.mean_const)
        var_ref = hp.amplitude - ks @ Ki @ ks
        mu, var = gp.predict(z)
        resid = y - hp.mean_const
        _, logdet = np.linalg.slogdet(K)
        llh_ref = -0.5 * (resid @ Ki @ resid + logdet + t * np.log(2 * np.pi))
        if (abs(mu - mu_ref) > 1e-8 or abs(var - max(var_ref, 0)) > 1e-8
                or abs(log_marginal_likelihood(data, hp) - llh_ref) > 1e-8):
            return False
    return True


def _ei_check(rng) -> bool:
    if expected_improvement(1.3, 0.0, 0.2) != 0.0:
        return False
    z = rng.standard_normal(200_000)
    for _ in range(10):
        mu, sigma, inc = rng.normal(), float(rng.uniform(0.05, 0.4)), rng.normal()
        mc = np.mean(np.maximum(mu + sigma * z - inc, 0.0))
        if abs(expected_improvement(mu, sigma, inc) - mc) > 3e-3:
            return False
    return True


def _split_check(rng) -> bool:
    for _ in range(20):
        n, d = int(rng.integers(12, 50)), int(rng.integers(1, 3))
        X = rng.uniform(0, 1, size=(n, d))
        y = np.where(X[:, 0] > 0.5, 5.0, 0.0) + 0.1 * rng.normal(size=n)
        data = Dataset(X, y, np.array([[0.0, 1.0]] * d))
        tree = build_tree(data, min_leaf=5)

        def ok(node) -> bool:
            if isinstance(node, Leaf):
                return node.indices.size >= 5
            on_thr = np.flatnonzero(data.X[node.indices, node.feature] == node.threshold)
            shared = node.indices[on_thr]
            both = (np.all(np.isin(shared, node.left.indices))
                    and np.all(np.isin(shared, node.right.indices)))
            return bool(shared.size and both and ok(node.left) and ok(node.right))

        if not ok(tree):
            return False
    return True


def _weights_check() -> bool:
    w = path_weights(3, [3, 2, 1, 0])
    return np.allclose(w, [2.0, 1.0, 2.0 / 3.0, 0.5]) and w[0] == 2.0


def run_checks() -> int:
    rng = np.random.default_rng(20240913)
    checks = [
        ("gp_matches_dense_inverse_oracle", lambda: _gp_oracle_check(rng)),
        ("ei_matches_monte_carlo", lambda: _ei_check(rng)),
        ("split_invariants_hold", lambda: _split_check(rng)),
        ("path_weight_formula", _weights_check),
    ]
    failures = 0
    for name, check in checks:
        try:
            good = check()
        except Exception as exc:  # a crash is a failure, not an abort
            good = False
            print(f"FAIL {name} (raised {type(exc).__name__}: {exc})")
        else:
            print(f"{'PASS' if good else 'FAIL'} {name}")
        failures += not good
    return 1 if failures else 0
