import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import ytx
from ytx import dist
from ytx.errors import DataError, TransformDomainError


def bisect_ppf(p, tol=1e-13):
    """Independent quantile oracle: bisection on an mpmath erfc CDF."""
    import mpmath

    mpmath.mp.dps = 30

    def cdf(x):
        return 0.5 * mpmath.erfc(-x / mpmath.sqrt(2))

    lo, hi = -10.0, 10.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


class TestLogOffset:
    def test_offset_all_positive(self):
        t = ytx.fit_log_offset(np.array([0.5, 2.0, 10.0]))
        assert t.params["offset"] == 1.0

    def test_offset_negative_values(self):
        t = ytx.fit_log_offset(np.array([-2.3, 1.0]))
        assert t.params["offset"] == 3.0

    def test_forward_zero(self):
        t = ytx.fit_log_offset(np.array([0.0, 5.0]))
        assert ytx.forward(t, np.array([0.0]))[0] == pytest.approx(0.0)


class TestSqrt:
    def test_forward(self):
        t = ytx.fit_sqrt(np.array([4.0]))
        assert ytx.forward(t, np.array([4.0]))[0] == 2.0

    def test_zero_fixed_point(self):
        t = ytx.fit_sqrt(np.array([0.0, 1.0]))
        assert ytx.forward(t, np.array([0.0]))[0] == 0.0

    def test_negative_rejected(self):
        with pytest.raises(TransformDomainError):
            ytx.fit_sqrt(np.array([-1.0]))


def grid_best_log_likelihood(loglike):
    grid = np.arange(-5.0, 5.0 + 1e-12, 0.01)
    return max(loglike(g) for g in grid)


class TestBoxCox:
    def test_lognormal_lambda_near_zero(self):
        y = np.exp(np.random.default_rng(3).normal(size=1000))
        t = ytx.fit_box_cox(y)
        assert -0.15 <= t.params["lambda"] <= 0.15

    def test_normal_lambda_near_one(self):
        y = np.random.default_rng(4).normal(10.0, 1.0, size=1000)
        t = ytx.fit_box_cox(y)
        assert 0.5 <= t.params["lambda"] <= 1.5

    def test_lambda_one_is_shifted_identity(self):
        from ytx.core import FittedTransform, forward
        t = FittedTransform("box-cox",
                            {"lambda": 1.0, "shift": 2.0,
                             "log_likelihood": 0.0}, (0.0, 1.0))
        y = np.array([3.0, 7.5])
        assert forward(t, y) == pytest.approx(y + 2.0 - 1.0)

    def test_constant_target_rejected(self):
        with pytest.raises(DataError, match="degenerate"):
            ytx.fit_box_cox(np.full(10, 3.0))

    def test_optimizer_beats_grid(self):
        rng = np.random.default_rng(11)
        for _ in range(3):
            y = np.abs(rng.normal(size=200)) + 0.1
            t = ytx.fit_box_cox(y)
            shifted = y + t.params["shift"]
            best = grid_best_log_likelihood(
                lambda l: dist.box_cox_log_likelihood(shifted, l))
            assert t.params["log_likelihood"] >= best - 1e-6


class TestYeoJohnson:
    def test_identity_branch(self):
        assert dist.yeo_johnson_transform(np.array([3.0]), 1.0)[0] == (
            pytest.approx(3.0))

    def test_log_branch(self):
        got = dist.yeo_johnson_transform(np.array([math.e - 1.0]), 0.0)[0]
        assert got == pytest.approx(1.0)

    def test_reduces_lognormal_skew(self):
        y = np.exp(np.random.default_rng(5).normal(size=1000))
        t = ytx.fit_yeo_johnson(y)
        assert abs(ytx.skewness(ytx.forward(t, y))) < 0.3

    def test_optimizer_beats_grid(self):
        rng = np.random.default_rng(12)
        for _ in range(3):
            y = rng.normal(size=150) ** 3
            t = ytx.fit_yeo_johnson(y)
            best = grid_best_log_likelihood(
                lambda l: dist.yeo_johnson_log_likelihood(y, l))
            assert t.params["log_likelihood"] >= best - 1e-6

    def test_negative_values_roundtrip(self):
        y = np.random.default_rng(6).normal(size=200) - 5.0
        t = ytx.fit_yeo_johnson(y)
        back = ytx.inverse(t, ytx.forward(t, y))
        assert np.allclose(back, y, rtol=1e-9, atol=1e-12)


class TestQuantile:
    def test_median_maps_near_zero(self):
        y = np.random.default_rng(8).normal(5.0, 2.0, size=1000)
        t = ytx.fit_quantile(y, "normal")
        z = ytx.forward(t, np.array([np.median(y)]))[0]
        assert abs(z) <= 0.05

    def test_uniform_extremes(self):
        y = np.arange(1.0, 101.0)
        t = ytx.fit_quantile(y, "uniform")
        eps = t.params["clip_epsilon"]
        assert ytx.forward(t, np.array([1.0]))[0] == pytest.approx(eps)
        assert ytx.forward(t, np.array([100.0]))[0] == pytest.approx(1 - eps)

    def test_normal_reference_is_normalish(self):
        from scipy import stats
        y = np.random.default_rng(9).gamma(2.0, size=1000)
        t = ytx.fit_quantile(y, "normal")
        ks = stats.kstest(ytx.forward(t, y), "norm").statistic
        assert ks <= 0.05

    def test_too_few_samples(self):
        with pytest.raises(DataError, match="too few samples"):
            ytx.fit_quantile(np.arange(5.0), "normal")

    def test_forward_monotone(self):
        y = np.random.default_rng(10).normal(size=300)
        t = ytx.fit_quantile(y, "normal")
        probe = np.sort(np.random.default_rng(1).uniform(
            y.min(), y.max(), size=200))
        z = ytx.forward(t, probe)
        assert np.all(np.diff(z) >= 0.0)


class TestSkewness:
    def test_symmetric_sample(self):
        assert ytx.skewness(np.array([-1.0, 0.0, 1.0])) == pytest.approx(0.0)

    def test_constant_rejected(self):
        with pytest.raises(DataError, match="zero variance"):
            ytx.skewness(np.full(5, 2.0))

    @given(st.floats(0.01, 100.0), st.floats(-50.0, 50.0))
    @settings(max_examples=25, deadline=None)
    def test_affine_invariance(self, a, b):
        y = np.random.default_rng(13).gamma(2.0, size=60)
        base = ytx.skewness(y)
        assert ytx.skewness(a * y + b) == pytest.approx(base, abs=1e-7)

    def test_negation_flips_sign(self):
        y = np.random.default_rng(14).gamma(2.0, size=60)
        assert ytx.skewness(-y) == pytest.approx(-ytx.skewness(y), abs=1e-10)


class TestNormalPpf:
    def test_half_maps_to_zero(self):
        assert ytx.normal_ppf(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_known_values_against_bisection(self):
        assert ytx.normal_ppf(0.975) == pytest.approx(
            bisect_ppf(0.975), abs=1e-8)
        assert ytx.normal_ppf(0.975) == pytest.approx(1.959964, abs=1e-6)
        assert ytx.normal_ppf(0.0013499) == pytest.approx(-3.0, abs=1e-3)
        assert ytx.normal_ppf(0.0013499) == pytest.approx(
            bisect_ppf(0.0013499), abs=1e-8)

    def test_random_probabilities_against_bisection(self):
        rng = np.random.default_rng(15)
        for p in rng.uniform(1e-6, 1 - 1e-6, size=10):
            assert ytx.normal_ppf(p) == pytest.approx(bisect_ppf(p), abs=1e-8)

    def test_ppf_cdf_roundtrip(self):
        for x in np.linspace(-6.0, 6.0, 61):
            assert ytx.normal_ppf(ytx.normal_cdf(x)) == pytest.approx(
                x, abs=1e-7)

    def test_out_of_range(self):
        for p in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(TransformDomainError):
                ytx.normal_ppf(p)

    def test_extreme_tails(self):
        for p in (1e-12, 1.0 - 1e-12):
            assert ytx.normal_ppf(p) == pytest.approx(bisect_ppf(p), abs=1e-8)
