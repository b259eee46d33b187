"""Tests for step CDFs, CvM_p, Wasserstein, energy distance and error decompositions."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm, wasserstein_distance

from rankgrad.divergences import (
    StepCDF,
    bias_variance_decompose,
    cdf_inner,
    concordance_function,
    self_concordance,
    cramer_distance,
    cvm_p,
    discretize,
    empirical_cdf,
    energy_cvm_factor,
    energy_distance,
    global_decompose,
    mixture_cdf,
    uniform_grid,
    verify_cvm_wasserstein,
    wasserstein_1d,
)
from rankgrad.errors import InputError

from oracles import projection_oracle, random_cdf

samples = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=30)


def delta(x):
    return StepCDF(np.array([float(x)]), np.array([1.0]))


# --------------------------------------------------------------------------
# StepCDF construction
# --------------------------------------------------------------------------


class TestEmpiricalCdf:
    def test_two_atoms(self):
        f = empirical_cdf([0, 1])
        assert f.locations.tolist() == [0, 1] and f.weights.tolist() == [0.5, 0.5]

    def test_duplicates_merge(self):
        f = empirical_cdf([1, 1, 2])
        np.testing.assert_allclose(f.weights, [2 / 3, 1 / 3])

    def test_weights_normalized(self):
        np.testing.assert_allclose(empirical_cdf([0, 1], [1, 3]).weights, [0.25, 0.75])

    def test_right_continuous(self):
        f = empirical_cdf([0, 1])
        assert f(0.0) == 0.5 and f(-1e-12) == 0.0 and f(1.0) == 1.0

    @pytest.mark.parametrize("bad", [dict(sample=[]), dict(sample=[1, 2], weights=[1, 0]),
                                     dict(sample=[1, np.nan])])
    def test_rejects_bad_input(self, bad):
        with pytest.raises(InputError):
            empirical_cdf(**bad)

    def test_quantile_is_generalized_inverse(self):
        f = empirical_cdf([1, 2, 3, 4])
        assert f.quantile([0.0, 0.25, 0.26, 0.5, 1.0]).tolist() == [1, 1, 2, 2, 4]

    def test_stepcdf_validates(self):
        with pytest.raises(InputError):
            StepCDF(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
        with pytest.raises(InputError):
            StepCDF(np.array([0.0, 1.0]), np.array([0.5, 0.6]))


# --------------------------------------------------------------------------
# CvM, concordance function, Wasserstein, energy
# --------------------------------------------------------------------------


class TestCvm:
    @given(samples)
    def test_self_is_zero(self, x):
        f = empirical_cdf(x)
        assert cvm_p(f, f, 2.0) == 0.0

    @pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
    def test_point_masses(self, p):
        assert cvm_p(delta(0), delta(1), p) == 1.0

    def test_asymmetry(self):
        u = empirical_cdf([0, 1])
        # at the atom 0 of delta_0: |1 - 1/2| ; at the atoms of u: |1/2 - 1|/2 + |1 - 1|/2
        assert cvm_p(delta(0), u, 1.0) == pytest.approx(0.5)
        assert cvm_p(u, delta(0), 1.0) == pytest.approx(0.25)

    @given(samples, samples)
    def test_non_negative(self, x, y):
        assert cvm_p(empirical_cdf(x), empirical_cdf(y), 1.5) >= 0.0

    def test_rejects_bad_p(self):
        with pytest.raises(InputError):
            cvm_p(delta(0), delta(1), 0.0)


class TestConcordanceFunction:
    def test_disjoint_point_masses(self):
        c = concordance_function(delta(0), delta(1))
        q = np.linspace(0, 1, 11)
        assert np.all(c(q) == 1.0)

    def test_self_concordance_dominates_identity_at_atoms(self):
        f = empirical_cdf([0.0, 1.0, 1.0, 3.0, 7.0])
        c = concordance_function(f, f)
        assert np.all(c(f.cumulative) >= f.cumulative - 1e-12)
        assert np.array_equal(c.locations, self_concordance(f).locations)

    def test_matches_dense_composition(self):
        x = empirical_cdf(np.arange(0, 10, 2.0))
        y = empirical_cdf(np.arange(1, 11, 2.0) + 0.5)
        c = concordance_function(x, y)
        # compare away from the jump points, where every convention agrees
        q = (np.arange(2000) + 0.5) / 2000
        brute = x(y.quantile(q))
        np.testing.assert_allclose(c(q), brute, atol=1e-12)
        assert c(1.0) == 1.0


class TestWasserstein:
    @given(samples)
    def test_self_is_zero(self, x):
        f = empirical_cdf(x)
        assert wasserstein_1d(f, f, 2.0) == 0.0

    def test_unit_translation(self):
        assert wasserstein_1d(delta(0), delta(1), 3.0) == 1.0

    @given(samples, st.floats(-10, 10), st.sampled_from([1.0, 2.0, 3.5]))
    def test_translation(self, x, c, p):
        f = empirical_cdf(x)
        g = empirical_cdf(np.asarray(x) + c)
        assert wasserstein_1d(f, g, p) == pytest.approx(abs(c), abs=1e-9)

    @given(samples, samples)
    def test_p1_matches_scipy(self, x, y):
        assert wasserstein_1d(empirical_cdf(x), empirical_cdf(y), 1.0) == pytest.approx(
            wasserstein_distance(x, y), abs=1e-9)

    @given(samples, samples, samples, st.sampled_from([1.0, 2.0, 4.0]))
    def test_triangle_inequality(self, a, b, c, p):
        fa, fb, fc = empirical_cdf(a), empirical_cdf(b), empirical_cdf(c)
        assert wasserstein_1d(fa, fc, p) <= wasserstein_1d(fa, fb, p) + wasserstein_1d(fb, fc, p) + 1e-12

    def test_rejects_p_below_one(self):
        with pytest.raises(InputError):
            wasserstein_1d(delta(0), delta(1), 0.5)


class TestEnergy:
    def test_examples(self):
        u = empirical_cdf([0, 1])
        assert energy_distance(delta(0), delta(1)) == 2.0
        assert energy_distance(u, u) == 0.0

    @given(samples, samples)
    def test_cramer_identity(self, x, y):
        fx, fy = empirical_cdf(x), empirical_cdf(y)
        assert energy_distance(fx, fy) == pytest.approx(2 * cramer_distance(fx, fy), abs=1e-10, rel=1e-10)


# --------------------------------------------------------------------------
# CvM / Wasserstein identity and the energy factor
# --------------------------------------------------------------------------


class TestCvmWasserstein:
    def test_identical_laws(self):
        f = discretize(norm.ppf, 200)
        chk = verify_cvm_wasserstein(f, f, 2.0)
        assert chk.cvm_root == 0.0 and chk.wasserstein == pytest.approx(0.0, abs=1e-15)

    @given(st.lists(st.integers(0, 6), min_size=1, max_size=30),
           st.lists(st.integers(0, 6), min_size=1, max_size=30), st.sampled_from([1.0, 2.0, 3.0]))
    def test_shared_atoms_are_exact(self, x, y, p):
        chk = verify_cvm_wasserstein(empirical_cdf(x), empirical_cdf(y), p)
        assert chk.residual < 1e-12

    def test_uniform_pair(self):
        x = discretize(lambda q: q, 1000)
        y = discretize(lambda q: q + 0.2, 1000)
        assert verify_cvm_wasserstein(x, y, 2.0).residual < 5e-3

    def test_uniform_pair_is_tight_at_every_n(self):
        res = [verify_cvm_wasserstein(discretize(lambda q: q, n), discretize(lambda q: q + 0.2, n)).residual
               for n in (100, 1000, 10000)]
        assert max(res) < 1e-12

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
    def test_gaussian_pair_is_tight(self, p):
        res = [verify_cvm_wasserstein(discretize(norm.ppf, n),
                                      discretize(lambda q: norm.ppf(q, 0.5), n), p).residual
               for n in (100, 1000, 10000)]
        # tie-free discretizations satisfy the identity up to rounding
        assert all(r < 1e-12 or r2 < r for r, r2 in zip(res, res[1:])) and max(res) < 1e-12

    def test_energy_factor_is_two(self):
        x = discretize(norm.ppf, 500)
        y = discretize(lambda q: norm.ppf(q, 0.5, 1.3), 500)
        fac = energy_cvm_factor(x, y)
        assert fac["ratio_xy"] == pytest.approx(2.0, rel=1e-9)


# --------------------------------------------------------------------------
# Bias-variance and global decompositions
# --------------------------------------------------------------------------


class TestBiasVariance:
    def test_single_member(self):
        rng = np.random.default_rng(0)
        truth, member = random_cdf(rng), random_cdf(rng)
        r = bias_variance_decompose([member], truth)
        assert r.variance_term == pytest.approx(0.0, abs=1e-15)
        assert r.total_error == pytest.approx(r.bias_term, abs=1e-15)

    def test_symmetric_pair_has_no_bias(self):
        truth = empirical_cdf(np.arange(10.0))
        lo = empirical_cdf(np.arange(10.0) - 0.5)
        hi = empirical_cdf(np.arange(10.0) + 0.5)
        r = bias_variance_decompose([lo, hi], truth)
        # at the truth atoms the two members sit at F +- 1/20 (or clipped at 1)
        fhat = 0.5 * (lo(truth.locations) + hi(truth.locations))
        assert r.bias_term == pytest.approx(np.dot(truth.weights, (fhat - truth(truth.locations)) ** 2))
        assert r.identity_holds

    def test_exact_symmetry(self):
        truth = StepCDF(np.array([0.0, 1.0]), np.array([0.5, 0.5]))
        # at the truth atoms a = (0.75, 1) and b = (0.25, 1) average to F = (0.5, 1)
        a = StepCDF(np.array([-1.0, 0.0, 1.0]), np.array([0.25, 0.5, 0.25]))
        b = StepCDF(np.array([0.0, 0.5, 1.0]), np.array([0.25, 0.25, 0.5]))
        r = bias_variance_decompose([a, b], truth)
        assert r.bias_term == pytest.approx(0.0, abs=1e-15)
        assert r.total_error == pytest.approx(r.variance_term, abs=1e-15)

    def test_random_ensembles(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            members = [random_cdf(rng) for _ in range(5)]
            probs = rng.dirichlet(np.ones(5))
            r = bias_variance_decompose(members, random_cdf(rng), probs)
            assert abs(r.residual) < 1e-10
            assert min(r.variance_term, r.bias_term) >= 0

    def test_rejects_empty(self):
        with pytest.raises(InputError):
            bias_variance_decompose([], delta(0))


class TestGlobalDecompose:
    def test_identity_with_grid_projection(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a, b, truth = random_cdf(rng), random_cdf(rng), random_cdf(rng)
            w = projection_oracle(a, b, truth)
            if not 1e-6 < w < 1.0 - 1e-6:
                continue  # the lemma needs an interior minimizer
            f_d = mixture_cdf([a, b], [w, 1 - w])
            family = [mixture_cdf([a, b], [v, 1 - v]) for v in rng.uniform(0, 1, 20)]
            f_t = family[0]
            r = global_decompose(f_t, f_d, truth, family)
            assert r.orthogonality < 1e-6
            assert abs(r.residual) < 1e-8

    def test_trivial_cases(self):
        rng = np.random.default_rng(2)
        truth = random_cdf(rng)
        r = global_decompose(truth, truth, truth)
        assert r.total_error == 0.0 and r.approx_term == 0.0 and r.bias_term == 0.0
        f = random_cdf(rng)
        r = global_decompose(f, truth, truth)
        assert r.bias_term == 0.0 and r.total_error == pytest.approx(r.approx_term)

    def test_rejects_non_projection(self):
        truth = empirical_cdf([0, 1, 2])
        with pytest.raises(InputError, match="projection"):
            global_decompose(delta(5), delta(-5), truth)

    def test_cdf_inner_symmetry(self):
        rng = np.random.default_rng(3)
        f, g, t = random_cdf(rng), random_cdf(rng), random_cdf(rng)
        assert cdf_inner(f, g, f, g, t) >= 0
        assert cdf_inner(f, g, g, f, t) == pytest.approx(-cdf_inner(f, g, f, g, t))


class TestGrids:
    def test_uniform_grid(self):
        g = uniform_grid(4)
        assert g.locations.tolist() == [0.25, 0.5, 0.75, 1.0]

    def test_mixture_is_pointwise_average(self):
        a, b = empirical_cdf([0, 2]), empirical_cdf([1, 3])
        m = mixture_cdf([a, b], [0.3, 0.7])
        t = np.linspace(-1, 4, 51)
        np.testing.assert_allclose(m(t), 0.3 * a(t) + 0.7 * b(t), atol=1e-15)
