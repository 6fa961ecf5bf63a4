import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from tirever.distributions import (
    SkewedTParams,
    chisq_sf,
    jarque_bera,
    jarque_bera_statistic,
    skewt_logpdf,
    skewt_pdf,
    skewt_sample,
    stream,
    t_logpdf,
)
from tirever.errors import DataError, DegenerateSeriesError


class TestSkewedTParams:
    @pytest.mark.parametrize("kw", [dict(nu=2.0), dict(nu=1.5), dict(nu=5, gamma=0.0), dict(nu=5, sigma=-1.0)])
    def test_invalid(self, kw):
        with pytest.raises(DataError):
            SkewedTParams(**kw)

    def test_symmetric_flag(self):
        assert SkewedTParams(4).symmetric
        assert not SkewedTParams(4, 1.5).symmetric


class TestDensity:
    def test_t3_at_zero_closed_form(self):
        expected = math.log(2.0 / (math.pi * math.sqrt(3.0)))
        assert skewt_logpdf(0.0, SkewedTParams(3.0)) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(float(stats.t.logpdf(0.0, 3)), abs=1e-14)

    @pytest.mark.parametrize("nu", [2.5, 3.0, 7.0, 40.0])
    def test_t_logpdf_matches_scipy(self, nu):
        x = np.linspace(-30, 30, 301)
        np.testing.assert_allclose(t_logpdf(x, nu), stats.t.logpdf(x, nu), rtol=0, atol=1e-12)

    @pytest.mark.parametrize("nu", [3.0, 10.0])
    @pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("sigma", [1.0, 2.5])
    def test_integrates_to_one(self, nu, gamma, sigma):
        p = SkewedTParams(nu, gamma, sigma)
        f = lambda x: skewt_pdf(x, p)  # noqa: E731
        neg = integrate.quad(f, -np.inf, 0.0, epsabs=1e-12, epsrel=1e-12)[0]
        pos = integrate.quad(f, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12)[0]
        assert neg + pos == pytest.approx(1.0, abs=1e-6)
        # two-piece mass split
        assert pos == pytest.approx(gamma**2 / (1 + gamma**2), abs=1e-6)

    @given(st.floats(-1e3, 1e3), st.floats(2.1, 100.0))
    def test_symmetric_when_gamma_one(self, x, nu):
        p = SkewedTParams(nu)
        assert skewt_logpdf(x, p) == skewt_logpdf(-x, p)

    def test_scale_jacobian(self):
        p1, p2 = SkewedTParams(5, 1.3, 1.0), SkewedTParams(5, 1.3, 2.0)
        x = np.linspace(-4, 4, 9)
        np.testing.assert_allclose(skewt_logpdf(2 * x, p2), skewt_logpdf(x, p1) - math.log(2.0), atol=1e-13)

    def test_finite_far_in_tails(self):
        assert np.all(np.isfinite(skewt_logpdf(np.array([-1e150, 1e150]), SkewedTParams(3, 2.0))))


class TestSampler:
    def test_deterministic(self):
        p = SkewedTParams(4.0, 1.5)
        a = skewt_sample(p, 100, stream(7, 1))
        b = skewt_sample(p, 100, stream(7, 1))
        c = skewt_sample(p, 100, stream(7, 2))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_symmetric_skewness(self):
        x = skewt_sample(SkewedTParams(5.0), 100_000, stream(1))
        assert abs(stats.skew(x)) < 0.1

    def test_positive_mass(self):
        x = skewt_sample(SkewedTParams(3.0, 2.0), 100_000, stream(2))
        assert np.mean(x > 0) == pytest.approx(0.8, abs=0.01)

    @pytest.mark.parametrize("gamma", [0.5, 2.0])
    def test_matches_density(self, gamma):
        p = SkewedTParams(6.0, gamma, 1.5)
        x = skewt_sample(p, 50_000, stream(3))
        for q in (-3.0, -1.0, 0.0, 0.5, 2.0, 5.0):
            cdf = integrate.quad(lambda u: skewt_pdf(u, p), -np.inf, q)[0]
            assert np.mean(x <= q) == pytest.approx(cdf, abs=0.01)

    def test_rejects_empty(self):
        with pytest.raises(DataError):
            skewt_sample(SkewedTParams(3.0), 0, stream(0))


class TestChiSquare:
    @pytest.mark.parametrize("x", [0.0, 0.1, 1.0, 5.991, 20.0, 300.0])
    def test_df2_closed_form(self, x):
        assert chisq_sf(x, 2) == pytest.approx(math.exp(-x / 2), rel=1e-12, abs=1e-300)

    def test_df1_normal_tail(self):
        for x in (0.5, 3.841, 10.0):
            assert chisq_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2)), abs=1e-12)
        assert chisq_sf(3.841, 1) == pytest.approx(0.05, abs=1e-3)
        assert chisq_sf(5.991, 2) == pytest.approx(0.05, abs=1e-3)

    @settings(max_examples=200)
    @given(st.floats(0.0, 500.0), st.integers(1, 40))
    def test_agrees_with_scipy(self, x, df):
        assert abs(chisq_sf(x, df) - stats.chi2.sf(x, df)) <= 1e-10

    def test_zero_and_errors(self):
        assert chisq_sf(0.0, 7) == 1.0
        with pytest.raises(DataError):
            chisq_sf(-1.0, 2)
        with pytest.raises(DataError):
            chisq_sf(1.0, 0)


class TestJarqueBera:
    def test_worked_example(self):
        stat = jarque_bera_statistic(100, 0.5, 1.0)
        assert stat == pytest.approx(100 / 6 * 0.5, abs=1e-12)
        assert stat == pytest.approx(8.333, abs=1e-3)
        assert chisq_sf(stat, 2) == pytest.approx(0.0155, abs=1e-4)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_scipy(self, seed):
        x = np.random.default_rng(seed).standard_t(5, 300)
        rep = jarque_bera(x)
        ref = stats.jarque_bera(x)
        assert rep.statistic == pytest.approx(ref.statistic, rel=1e-10)
        assert rep.p_value == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-15)
        assert rep.sample_size == 300

    def test_gaussian_moments_give_zero(self):
        # {-1, 0, +1} with mass 1/6 on each tail point: skewness 0, kurtosis 3
        x = np.array([1.0, -1.0, 0, 0, 0, 0] * 2)
        rep = jarque_bera(x)
        assert rep.skewness == 0.0
        assert rep.excess_kurtosis == pytest.approx(0.0, abs=1e-12)
        assert rep.statistic == pytest.approx(0.0, abs=1e-12)
        assert rep.p_value == pytest.approx(1.0, abs=1e-12)

    def test_size(self):
        rng = np.random.default_rng(2024)
        pv = np.array([jarque_bera(rng.standard_normal(10_000)).p_value for _ in range(1000)])
        assert 0.03 <= np.mean(pv < 0.05) <= 0.07
        # roughly uniform p-values
        assert stats.kstest(pv, "uniform").pvalue > 0.001

    def test_errors(self):
        with pytest.raises(DataError, match="at least 8"):
            jarque_bera(np.ones(5))
        with pytest.raises(DegenerateSeriesError):
            jarque_bera(np.full(20, 3.0))
