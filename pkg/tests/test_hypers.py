"""Hierarchical hyper-parameter inference: path weights, weighted posterior
algebra, slice-sampler distributional correctness, and posterior recovery."""

import numpy as np
import pytest
from scipy import stats

from treedbo import (ChainInitError, Dataset, HyperPrior, Hyperparams,
                     PriorSpec, WeightedFactor, build_tree, default_prior,
                     infer_leaf_hypers, leaf_factors, leaf_paths,
                     log_marginal_likelihood, path_weights, slice_sample,
                     weighted_log_posterior)
from treedbo.hypers import _fast_posterior_fn

UNIT1 = np.array([[0.0, 1.0]])


class TestPathWeights:
    def test_leaf_weight_is_two(self):
        assert path_weights(3, [3])[0] == 2.0
        assert path_weights(0, [0])[0] == 2.0

    def test_derived_values_depth_two(self):
        w = path_weights(2, [2, 1, 0])
        np.testing.assert_allclose(w, [2.0, 1.0, 2.0 / 3.0])

    def test_root_only_tree(self):
        np.testing.assert_allclose(path_weights(0, [0]), [2.0])

    def test_positive_nonincreasing_leaf_to_root(self):
        for leaf_depth in range(7):
            w = path_weights(leaf_depth, list(range(leaf_depth, -1, -1)))
            assert np.all(w > 0)
            assert np.all(np.diff(w) <= 0)
            assert w[0] == 2.0

    def test_exact_formula_on_built_trees_up_to_depth_six(self):
        # staircase outputs force deep splits with a small min_leaf
        rng = np.random.default_rng(0)
        x = np.sort(rng.uniform(size=400))
        y = np.floor(x * 128) + 0.01 * rng.normal(size=400)
        data = Dataset(x[:, None], y, UNIT1)
        tree = build_tree(data, min_leaf=2)
        deepest = 0
        for path in leaf_paths(tree):
            leaf = path.nodes[0]
            deepest = max(deepest, leaf.depth)
            w = path_weights(leaf.depth, [n.depth for n in path.nodes])
            for wi, node in zip(w, path.nodes):
                assert wi == 2.0 / (1.0 + leaf.depth - node.depth)
        assert deepest >= 6

    def test_invalid_depths_rejected(self):
        with pytest.raises(ValueError):
            path_weights(1, [2])


def toy_factor(seed=0, n=6, weight=2.0):
    rng = np.random.default_rng(seed)
    data = Dataset(rng.uniform(size=(n, 1)), rng.normal(size=n), UNIT1)
    return WeightedFactor(data, weight)


def hp_at(amp=1.0, ls=0.5, noise=0.05, mean=0.0):
    return Hyperparams(amp, np.array([ls]), noise, mean)


class TestWeightedLogPosterior:
    def test_single_factor_weight_two_flat_prior(self):
        f = toy_factor(weight=2.0)
        theta = hp_at()
        expected = 2.0 * log_marginal_likelihood(f.data, theta)
        assert weighted_log_posterior(theta, [f]) == pytest.approx(expected, rel=1e-12)

    def test_unit_weights_give_plain_pseudo_likelihood(self):
        fs = [toy_factor(seed=s, weight=1.0) for s in range(3)]
        theta = hp_at()
        expected = sum(log_marginal_likelihood(f.data, theta) for f in fs)
        assert weighted_log_posterior(theta, fs) == pytest.approx(expected, rel=1e-12)

    def test_argmax_invariance_root_only_flat_prior(self):
        # 2x scaling of the log likelihood cannot move the argmax
        f = toy_factor(seed=3, n=10)
        amps = np.exp(np.linspace(-2, 2, 17))
        lss = np.exp(np.linspace(-2.5, 1.0, 17))
        post, llh = {}, {}
        for a in amps:
            for l in lss:
                theta = hp_at(amp=a, ls=l)
                post[(a, l)] = weighted_log_posterior(theta, [f])
                llh[(a, l)] = log_marginal_likelihood(f.data, theta)
        assert max(post, key=post.get) == max(llh, key=llh.get)

    def test_prior_contribution_added(self):
        f = toy_factor(weight=2.0)
        prior = default_prior([1.0], f.data.y)
        theta = hp_at()
        flat = weighted_log_posterior(theta, [f])
        with_prior = weighted_log_posterior(theta, [f], prior)
        assert with_prior == pytest.approx(flat + prior.log_pdf(prior.pack(theta)),
                                           rel=1e-9)

    def test_ill_conditioned_state_rejected_not_raised(self):
        data = Dataset(np.array([[0.5], [0.5]]), np.array([0.0, 5.0]), UNIT1)
        theta = Hyperparams(1e8, np.array([1e6]), 0.0, 0.0)
        out = weighted_log_posterior(theta, [WeightedFactor(data, 2.0)])
        assert out == -np.inf or np.isfinite(out)

    def test_fast_path_matches_reference(self):
        rng = np.random.default_rng(12)
        data = Dataset(rng.uniform(size=(12, 2)), rng.normal(size=12),
                       np.array([[0.0, 1.0]] * 2))
        tree = build_tree(data, min_leaf=5)
        prior = default_prior([1.0, 1.0], data.y, warp=True)
        for path in leaf_paths(tree):
            factors = leaf_factors(data, path)
            fast = _fast_posterior_fn(factors, prior)
            for _ in range(5):
                u = prior.center_packed() + rng.normal(scale=0.3, size=len(prior.specs()))
                theta = prior.unpack(u)
                ref = weighted_log_posterior(theta, factors, prior)
                assert fast(u) == pytest.approx(ref, rel=1e-9, abs=1e-9)


class TestLeafFactors:
    def test_weights_and_data_follow_path(self):
        rng = np.random.default_rng(5)
        x = np.sort(rng.uniform(size=40))
        y = np.floor(x * 8) * 3 + 0.05 * rng.normal(size=40)
        data = Dataset(x[:, None], y, UNIT1)
        tree = build_tree(data, min_leaf=5)
        for path in leaf_paths(tree):
            factors = leaf_factors(data, path)
            leaf = path.nodes[0]
            assert factors[0].weight == 2.0
            assert factors[0].data.n == leaf.indices.size
            nonempty = [e for e in path.exclusions if e.size]
            assert len(factors) == 1 + len(nonempty)
            for f in factors:
                assert f.data.n > 0
                assert 0 < f.weight <= 2.0


class TestSliceSample:
    def test_standard_normal_moments(self):
        target = lambda x: -0.5 * float(x[0] ** 2)
        draws = slice_sample(target, np.array([0.0]), 5000, n_burn=100, seed=42)
        assert abs(draws.mean()) < 0.05
        assert abs(draws.var() - 1.0) < 0.1

    def test_normal_ks(self):
        target = lambda x: -0.5 * float(x[0] ** 2)
        draws = slice_sample(target, np.array([0.0]), 5000, n_burn=100, seed=7)
        ks = stats.kstest(draws[:, 0], stats.norm.cdf).statistic
        assert ks < 0.05

    def test_lognormal_ks(self):
        def target(x):
            v = x[0]
            if v <= 0:
                return -np.inf
            return float(-np.log(v) - 0.5 * (np.log(v) / 0.5) ** 2)

        draws = slice_sample(target, np.array([1.0]), 5000, n_burn=100, seed=11)
        ks = stats.kstest(draws[:, 0], stats.lognorm(s=0.5).cdf).statistic
        assert ks < 0.05

    def test_deterministic_given_seed(self):
        target = lambda x: -0.5 * float(x @ x)
        a = slice_sample(target, np.zeros(3), 50, n_burn=10, seed=123)
        b = slice_sample(target, np.zeros(3), 50, n_burn=10, seed=123)
        np.testing.assert_array_equal(a, b)

    def test_init_at_minus_inf_raises(self):
        target = lambda x: -np.inf
        with pytest.raises(ChainInitError):
            slice_sample(target, np.zeros(1), 10, seed=0)

    def test_multivariate_correlated_target(self):
        cov = np.array([[1.0, 0.8], [0.8, 1.0]])
        prec = np.linalg.inv(cov)
        target = lambda x: -0.5 * float(x @ prec @ x)
        draws = slice_sample(target, np.zeros(2), 4000, n_burn=200, seed=3)
        emp = np.cov(draws.T)
        assert np.allclose(emp, cov, atol=0.15)


class TestPriorSpec:
    def test_lognormal_packs_to_log_scale(self):
        spec = PriorSpec("lognormal", mu=0.3, sigma=1.0)
        assert spec.packed(np.exp(0.3)) == pytest.approx(0.3)
        assert spec.natural(0.3) == pytest.approx(np.exp(0.3))

    def test_normal_identity_packing(self):
        spec = PriorSpec("normal", mu=0.0, sigma=2.0)
        assert spec.packed(1.7) == 1.7
        assert spec.natural(1.7) == 1.7

    def test_logpdf_is_normal_in_packed_space(self):
        spec = PriorSpec("lognormal", mu=0.5, sigma=0.8)
        assert spec.logpdf_packed(1.1) == pytest.approx(
            stats.norm(0.5, 0.8).logpdf(1.1))

    def test_pack_unpack_roundtrip_with_warp(self):
        prior = default_prior([1.0, 2.0], np.array([0.0, 1.0, 2.0]), warp=True)
        hp = Hyperparams(1.5, np.array([0.4, 0.9]), 0.01, 0.3,
                         warp=np.array([[1.2, 0.8], [2.0, 1.0]]))
        back = prior.unpack(prior.pack(hp))
        assert back.amplitude == pytest.approx(hp.amplitude)
        np.testing.assert_allclose(back.length_scales, hp.length_scales)
        assert back.noise_var == pytest.approx(hp.noise_var)
        assert back.mean_const == pytest.approx(hp.mean_const)
        np.testing.assert_allclose(back.warp, hp.warp)


class TestInferLeafHypers:
    def test_single_sample_pipeline_runs(self):
        f = toy_factor(n=8)
        prior = default_prior([1.0], f.data.y)
        draws = infer_leaf_hypers([f], prior, n_samples=1, n_burn=2, seed=0)
        assert len(draws) == 1
        assert isinstance(draws[0], Hyperparams)

    def test_reproducible_given_seed(self):
        f = toy_factor(n=8)
        prior = default_prior([1.0], f.data.y)
        a = infer_leaf_hypers([f], prior, n_samples=3, n_burn=5, seed=99)
        b = infer_leaf_hypers([f], prior, n_samples=3, n_burn=5, seed=99)
        for ha, hb in zip(a, b):
            assert ha.amplitude == hb.amplitude
            np.testing.assert_array_equal(ha.length_scales, hb.length_scales)

    def test_recovers_generating_length_scale(self):
        # draw a function from a known GP and check the posterior concentrates
        rng = np.random.default_rng(8)
        n, ls_true = 40, 0.2
        X = np.sort(rng.uniform(size=n))[:, None]
        d = np.abs(X - X.T) / ls_true
        K = (1 + np.sqrt(5) * d + 5 * d * d / 3) * np.exp(-np.sqrt(5) * d)
        y = np.linalg.cholesky(K + 1e-10 * np.eye(n)) @ rng.normal(size=n)
        data = Dataset(X, y, UNIT1)
        prior = HyperPrior(
            amplitude=PriorSpec("lognormal", 0.0, 0.5),
            length_scales=(PriorSpec("lognormal", np.log(0.5), 1.0),),
            noise_var=PriorSpec("lognormal", np.log(1e-4), 1.0),
            mean_const=PriorSpec("normal", 0.0, 0.5))
        draws = infer_leaf_hypers([WeightedFactor(data, 2.0)], prior,
                                  n_samples=30, n_burn=50, seed=4)
        med = np.median([h.length_scales[0] for h in draws])
        assert ls_true / 2 <= med <= ls_true * 2

    def test_hierarchy_inflates_leaf_length_scale_vs_ml(self):
        # 5 tightly clustered leaf points alone admit a short length scale;
        # informative ancestors must pull the posterior toward longer ones.
        rng = np.random.default_rng(15)
        ls_true = 0.4
        Xa = np.linspace(0.02, 0.98, 60)[:, None]
        d = np.abs(Xa - Xa.T) / ls_true
        K = (1 + np.sqrt(5) * d + 5 * d * d / 3) * np.exp(-np.sqrt(5) * d)
        ya = np.linalg.cholesky(K + 1e-10 * np.eye(60)) @ rng.normal(size=60)
        leaf_rows = np.arange(27, 32)          # ~0.45..0.53, span 0.08
        rest = np.setdiff1d(np.arange(60), leaf_rows)
        leaf_data = Dataset(Xa[leaf_rows], ya[leaf_rows], UNIT1)
        ancestor = Dataset(Xa[rest], ya[rest], UNIT1)

        # leaf-only maximum-likelihood oracle over a dense length-scale grid
        def leaf_ml_ls():
            grid = np.exp(np.linspace(np.log(5e-3), np.log(5.0), 120))
            best, best_llh = None, -np.inf
            for ls in grid:
                hp = Hyperparams(float(np.var(ya)), np.array([ls]), 1e-6, 0.0)
                llh = log_marginal_likelihood(leaf_data, hp)
                if llh > best_llh:
                    best, best_llh = ls, llh
            return best

        ml_ls = leaf_ml_ls()
        prior = default_prior([1.0], ya)
        factors = [WeightedFactor(leaf_data, 2.0), WeightedFactor(ancestor, 1.0)]
        draws = infer_leaf_hypers(factors, prior, n_samples=30, n_burn=40, seed=2)
        med = np.median([h.length_scales[0] for h in draws])
        assert med > ml_ls
