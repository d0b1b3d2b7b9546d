import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from conftest import GRID, grid_id
from ghstein.bessel import bessel_k
from ghstein.distributions import (GHParams, GIGParams, SampleSet, affine_transform,
                                   gh_cdf, gh_expectation, gh_log_pdf,
                                   gh_log_tail_leading, gh_mean, gh_mgf,
                                   gh_pdf, gh_pdf_derivatives, gh_ppf, gh_sample,
                                   gh_tail_leading, gh_variance, gig_cdf, gig_mean,
                                   gig_moment, gig_pdf, gig_sample)
from ghstein.numerics import QuadratureConfig, RandomStream, integrate

from helpers import richardson

TIGHT = QuadratureConfig(1e-13, 1e-15, 4000)
TAIL_SETS = [GHParams(1.0, 2.0, 0.5, 1.0), GHParams(-1.0, 1.0, 0.3, 1.0),
             GHParams(2.0, 5.0, -2.0, 1.0), GHParams(0.5, 1.5, 0.0, 2.0)]


def normalisation(p):
    m = gh_mean(p)
    v, _ = integrate(lambda x: gh_pdf(p, x), -np.inf, np.inf, TIGHT)
    # split at the mean as a second, independent evaluation
    lo, _ = integrate(lambda x: gh_pdf(p, x), -np.inf, m, TIGHT)
    hi, _ = integrate(lambda x: gh_pdf(p, x), m, np.inf, TIGHT)
    return v, lo + hi


class TestParams:
    def test_gamma_cached(self):
        p = GHParams(1.0, 2.0, 0.5, 1.0)
        assert p.gamma == pytest.approx(math.sqrt(4 - 0.25), rel=1e-15)
        assert p.gamma is p.gamma

    @pytest.mark.parametrize("kw", [dict(alpha=1.0, beta=1.0), dict(alpha=1.0, beta=-2.0),
                                    dict(delta=0.0), dict(delta=-1.0), dict(alpha=np.nan)])
    def test_domain(self, kw):
        base = dict(lam=1.0, alpha=2.0, beta=0.0, delta=1.0)
        base.update(kw)
        with pytest.raises(ValueError):
            GHParams(**base)

    def test_domain_message(self):
        with pytest.raises(ValueError, match="alpha must exceed"):
            GHParams(1.0, 1.0, 2.0, 1.0)

    def test_round_trip(self):
        p = GHParams(-0.5, 3.0, -1.0, 2.0, 0.25)
        assert GHParams.from_dict(json.loads(json.dumps(p.to_dict()))) == p

    def test_gig_domain(self):
        with pytest.raises(ValueError):
            GIGParams(1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            GIGParams(1.0, 1.0, -1.0)

    def test_mixing_bridge(self):
        g = GHParams(0.7, 2.0, 0.5, 1.5).mixing()
        assert (g.lam, g.a, g.b) == pytest.approx((0.7, 3.75, 2.25))


class TestDensity:
    @pytest.mark.parametrize("p", GRID, ids=grid_id)
    def test_normalisation(self, p):
        v1, v2 = normalisation(p)
        assert abs(v1 - 1) <= 1e-8
        assert abs(v2 - 1) <= 1e-8

    def test_symmetric_when_beta_zero(self):
        p = GHParams(0.3, 1.7, 0.0, 0.8)
        x = np.linspace(0, 30, 301)
        np.testing.assert_array_equal(gh_pdf(p, x), gh_pdf(p, -x))

    def test_hyperbolic(self):
        p = GHParams(1.0, 2.0, 0.5, 1.3)
        x = np.linspace(-15, 15, 121)
        g = p.gamma
        exact = g / (2 * p.alpha * p.delta * special.kv(1, p.delta * g)) * np.exp(
            -p.alpha * np.hypot(p.delta, x) + p.beta * x)
        np.testing.assert_allclose(gh_pdf(p, x), exact, rtol=1e-12)

    def test_nig(self):
        p = GHParams(-0.5, 2.0, -0.7, 0.9)
        x = np.linspace(-15, 15, 121)
        r = np.hypot(p.delta, x)
        exact = (p.alpha * p.delta * special.kv(1, p.alpha * r) / (np.pi * r)
                 * np.exp(p.delta * p.gamma + p.beta * x))
        np.testing.assert_allclose(gh_pdf(p, x), exact, rtol=1e-12)

    def test_mixture_representation(self):
        # density as a GIG mixture of normals, by quadrature over the mixing law
        p = GHParams(0.7, 1.8, 0.4, 1.1)
        g = p.mixing()
        for x in (-2.0, 0.0, 0.5, 3.0):
            f = lambda v: gig_pdf(g, v) * stats.norm.pdf(x, p.beta * v, np.sqrt(v))  # noqa
            v, _ = integrate(f, 0, np.inf, TIGHT)
            assert gh_pdf(p, x) == pytest.approx(v, rel=1e-9)

    def test_log_consistent(self):
        p = GHParams(1.5, 2.0, 1.0, 0.5)
        x = np.linspace(-40, 40, 81)
        np.testing.assert_allclose(np.exp(gh_log_pdf(p, x)), gh_pdf(p, x), rtol=1e-12)

    def test_log_far_tail_finite(self):
        p = GHParams(1.0, 2.0, 1.0, 1.0)
        vals = gh_log_pdf(p, np.array([-1e4, 1e4]))
        assert np.all(np.isfinite(vals))
        assert gh_pdf(p, 1e4) == 0.0  # the log is the usable quantity out there

    def test_location(self):
        p = GHParams(1.0, 2.0, 0.5, 1.0, mu=3.0)
        q = GHParams(1.0, 2.0, 0.5, 1.0)
        np.testing.assert_allclose(gh_pdf(p, np.array([1.0, 3.0, 7.0])),
                                   gh_pdf(q, np.array([-2.0, 0.0, 4.0])), rtol=1e-14)

    @pytest.mark.parametrize("p", GRID[::4], ids=grid_id)
    def test_analytic_derivatives(self, p):
        for x in (-3.0, -0.5, 0.0, 1.0, 4.0):
            d0, d1, d2 = gh_pdf_derivatives(p, x)
            f = lambda t: gh_pdf(p, t)  # noqa: E731
            assert d0 == pytest.approx(gh_pdf(p, x), rel=1e-13)
            assert d1 == pytest.approx(richardson(f, x, 1, step=0.05), rel=1e-7, abs=1e-12)
            assert d2 == pytest.approx(richardson(f, x, 2, step=0.05), rel=1e-6, abs=1e-10)


class TestMoments:
    def test_mean_zero_when_symmetric(self):
        assert gh_mean(GHParams(1.3, 2.0, 0.0, 1.0, mu=0.4)) == 0.4

    def test_variance_special_case(self):
        p = GHParams(1.0, 2.0, 0.0, 1.0)
        assert gh_variance(p) == pytest.approx(special.kv(2, 2) / (2 * special.kv(1, 2)),
                                               rel=1e-13)

    @pytest.mark.parametrize("p", GRID[::3], ids=grid_id)
    def test_against_quadrature(self, p):
        m, _ = gh_expectation(p, lambda x: x, decay=(p.alpha - abs(p.beta)) / 2)
        s, _ = gh_expectation(p, lambda x: (x - m) ** 2, decay=(p.alpha - abs(p.beta)) / 2)
        assert gh_mean(p) == pytest.approx(m, rel=1e-9, abs=1e-12)
        assert gh_variance(p) == pytest.approx(s, rel=1e-9)

    def test_mgf_at_zero(self):
        assert gh_mgf(GHParams(0.5, 2.0, 0.7, 1.0), 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_mgf_slope_is_mean(self):
        p = GHParams(0.5, 2.0, 0.7, 1.0)
        slope = richardson(lambda t: gh_mgf(p, t), 0.0, 1, step=0.05)
        assert slope == pytest.approx(gh_mean(p), rel=1e-6)

    @pytest.mark.parametrize("p", GRID[1::5], ids=grid_id)
    def test_mgf_quadrature(self, p):
        t = (p.alpha - abs(p.beta)) / 2
        v, _ = gh_expectation(p, lambda x: np.exp(t * x), decay=t / 2)
        assert gh_mgf(p, t) == pytest.approx(v, rel=1e-8)

    def test_mgf_domain(self):
        with pytest.raises(ValueError):
            gh_mgf(GHParams(1.0, 2.0, 0.5, 1.0), 1.5)


class TestTail:
    @pytest.mark.parametrize("p", TAIL_SETS, ids=grid_id)
    def test_ratio_converges(self, p):
        # ratios in log space: both factors underflow for steep tails
        r100 = math.exp(gh_log_pdf(p, 100.0) - gh_log_tail_leading(p, 100.0))
        r200 = math.exp(gh_log_pdf(p, 200.0) - gh_log_tail_leading(p, 200.0))
        assert abs(r200 - 1) <= 0.02
        assert abs(r200 - 1) < abs(r100 - 1)

    @pytest.mark.parametrize("p", TAIL_SETS, ids=grid_id)
    def test_envelope(self, p):
        x = np.linspace(100, 300, 41)
        assert np.all(gh_log_pdf(p, x) <= math.log(2) + gh_log_tail_leading(p, x))

    def test_even_when_symmetric(self):
        p = GHParams(1.0, 2.0, 0.0, 1.0)
        x = np.array([50.0, 120.0])
        np.testing.assert_allclose(gh_tail_leading(p, x), gh_tail_leading(p, -x), rtol=1e-15)


class TestCdf:
    def test_limits(self):
        p = GHParams(1.0, 2.0, 0.5, 1.0)
        assert gh_cdf(p, -200.0) == pytest.approx(0.0, abs=1e-14)
        assert gh_cdf(p, 200.0) == pytest.approx(1.0, abs=1e-12)

    def test_median_symmetric(self):
        p = GHParams(-1.0, 1.0, 0.0, 1.0, mu=2.0)
        assert gh_cdf(p, 2.0) == pytest.approx(0.5, abs=1e-10)

    @given(st.lists(st.floats(-30, 30), min_size=2, max_size=40))
    @settings(max_examples=30, deadline=None)
    def test_monotone(self, xs):
        p = GHParams(0.5, 2.0, 1.0, 1.0)
        xs = np.sort(np.asarray(xs))
        assert np.all(np.diff(gh_cdf(p, xs)) >= 0)

    def test_against_pointwise_quadrature(self):
        p = GHParams(2.0, 1.0, -0.5, 1.0)
        for x in (-8.0, -1.0, 0.3, 5.0):
            v, _ = integrate(lambda t: gh_pdf(p, t), -np.inf, x, TIGHT)
            assert gh_cdf(p, x) == pytest.approx(v, abs=1e-10)

    def test_ppf_inverts(self):
        p = GHParams(1.0, 2.0, 0.5, 1.0)
        q = np.array([1e-6, 0.01, 0.3, 0.5, 0.9, 0.999999])
        np.testing.assert_allclose(gh_cdf(p, gh_ppf(p, q)), q, rtol=1e-9, atol=1e-13)

    @pytest.mark.slow
    def test_ecdf(self):
        p = GHParams(1.0, 2.0, 0.5, 1.0)
        n = 10 ** 6
        x = np.sort(gh_sample(p, n, RandomStream(11)).values)
        pts = np.linspace(-2, 3, 11)
        F = gh_cdf(p, pts)
        ecdf = np.searchsorted(x, pts, side="right") / n
        assert np.all(np.abs(ecdf - F) <= 4 * np.sqrt(F * (1 - F) / n))


class TestGIG:
    @pytest.mark.parametrize("lam,a,b", [(-1.0, 1.0, 1.0), (0.5, 2.0, 1.0), (2.0, 5.0, 1.0),
                                         (-0.5, 3.0, 0.2), (1.0, 0.1, 10.0)])
    def test_normalisation_and_mean(self, lam, a, b):
        g = GIGParams(lam, a, b)
        v, _ = integrate(lambda x: gig_pdf(g, x), 0, np.inf, TIGHT)
        m, _ = integrate(lambda x: x * gig_pdf(g, x), 0, np.inf, TIGHT)
        assert abs(v - 1) <= 1e-8
        assert gig_mean(g) == pytest.approx(m, rel=1e-8)
        l = math.sqrt(b / a) * special.kv(lam + 1, math.sqrt(a * b)) / special.kv(
            lam, math.sqrt(a * b))
        assert gig_mean(g) == pytest.approx(l, rel=1e-12)

    def test_inverse_gaussian_shape(self):
        a, b = 2.0, 3.0
        g = GIGParams(-0.5, a, b)
        x = np.linspace(0.05, 10, 50)
        # normaliser from K_{1/2} in closed form
        k = math.sqrt(math.pi / (2 * math.sqrt(a * b))) * math.exp(-math.sqrt(a * b))
        c = (a / b) ** -0.25 / (2 * k)
        np.testing.assert_allclose(gig_pdf(g, x), c * x ** -1.5 * np.exp(-(a * x + b / x) / 2),
                                   rtol=1e-13)
        assert k == pytest.approx(bessel_k(0.5, math.sqrt(a * b)), rel=1e-14)

    def test_support(self):
        with pytest.raises(ValueError):
            gig_pdf(GIGParams(1.0, 1.0, 1.0), 0.0)

    @pytest.mark.parametrize("r", [-1.5, 1.0, 2.0, 3.5])
    def test_moment(self, r):
        g = GIGParams(0.3, 2.0, 1.5)
        v, _ = integrate(lambda x: x ** r * gig_pdf(g, x), 0, np.inf, TIGHT)
        assert gig_moment(g, r) == pytest.approx(v, rel=1e-9)

    @pytest.mark.parametrize("lam,a,b", [(-1.0, 1.0, 1.0), (0.5, 2.0, 1.0), (2.0, 5.0, 1.0),
                                         (0.0, 0.5, 0.5), (-2.5, 4.0, 8.0), (3.0, 0.01, 2.0)])
    def test_sampler_ks(self, lam, a, b):
        g = GIGParams(lam, a, b)
        n = 10 ** 5
        x = np.sort(gig_sample(g, n, RandomStream(2024, 1)).values)
        assert np.all(x > 0)
        F = gig_cdf(g, x)
        i = np.arange(1, n + 1)
        d = max(np.max(i / n - F), np.max(F - (i - 1) / n))
        assert d < stats.kstwo.ppf(0.999, n)

    @pytest.mark.slow
    def test_sampler_mean(self):
        g = GIGParams(0.5, 2.0, 1.0)
        x = gig_sample(g, 10 ** 6, RandomStream(5)).values
        se = math.sqrt((gig_moment(g, 2) - gig_mean(g) ** 2) / x.size)
        assert abs(x.mean() - gig_mean(g)) <= 4 * se

    def test_reproducible(self):
        g = GIGParams(0.5, 2.0, 1.0)
        a = gig_sample(g, 1000, RandomStream(9, 2)).values
        b = gig_sample(g, 1000, RandomStream(9, 2)).values
        np.testing.assert_array_equal(a, b)

    def test_cdf_complement(self):
        g = GIGParams(1.0, 2.0, 1.0)
        x = 2.5
        up, _ = integrate(lambda t: gig_pdf(g, t), x, np.inf, TIGHT)
        assert gig_cdf(g, x) == pytest.approx(1 - up, abs=1e-12)


class TestSampler:
    @pytest.mark.parametrize("p", [GHParams(1.0, 2.0, 0.5, 1.0), GHParams(-1.0, 1.0, 0.0, 1.0),
                                   GHParams(2.0, 5.0, -2.5, 1.0), GHParams(0.5, 1.0, 0.5, 1.0)],
                             ids=grid_id)
    @pytest.mark.slow
    def test_mean_variance(self, p):
        x = gh_sample(p, 10 ** 6, RandomStream(77)).values
        n = x.size
        var = gh_variance(p)
        assert abs(x.mean() - gh_mean(p)) <= 4 * math.sqrt(var / n)
        m4, _ = gh_expectation(p, lambda t: (t - gh_mean(p)) ** 4,
                               decay=(p.alpha - abs(p.beta)) / 2)
        assert abs(x.var(ddof=1) - var) <= 4 * math.sqrt((m4 - var * var) / n)

    @pytest.mark.slow
    def test_skewness_symmetric(self):
        p = GHParams(1.0, 2.0, 0.0, 1.0)
        x = gh_sample(p, 10 ** 6, RandomStream(3)).values
        assert abs(stats.skew(x)) <= 4 * math.sqrt(6 / x.size) * 2

    @pytest.mark.slow
    def test_chi_square(self):
        p = GHParams(1.0, 2.0, 0.5, 1.0)
        n = 10 ** 6
        x = gh_sample(p, n, RandomStream(1234)).values
        edges = gh_ppf(p, np.arange(1, 50) / 50)
        counts = np.bincount(np.searchsorted(edges, x), minlength=50)
        _, pval = stats.chisquare(counts)
        assert pval > 0.001

    def test_reproducible_and_streams(self):
        p = GHParams(1.0, 2.0, 0.5, 1.0)
        a = gh_sample(p, 500, RandomStream(1, 0)).values
        np.testing.assert_array_equal(a, gh_sample(p, 500, RandomStream(1, 0)).values)
        assert not np.array_equal(a, gh_sample(p, 500, RandomStream(1, 1)).values)

    def test_location_shift(self):
        p = GHParams(1.0, 2.0, 0.5, 1.0, mu=4.0)
        q = GHParams(1.0, 2.0, 0.5, 1.0)
        np.testing.assert_allclose(gh_sample(p, 100, RandomStream(8)).values,
                                   gh_sample(q, 100, RandomStream(8)).values + 4.0,
                                   rtol=0, atol=1e-14)


class TestAffine:
    def test_identity(self):
        p = GHParams(1.0, 2.0, 0.5, 1.0, 0.3)
        assert affine_transform(p, 1, 0) == p

    def test_reflection(self):
        q = affine_transform(GHParams(1.0, 2.0, 0.5, 1.0), -1, 0)
        assert (q.alpha, q.beta, q.delta) == (2.0, -0.5, 1.0)

    @pytest.mark.parametrize("a", [-2.0, 0.5, 3.0])
    @pytest.mark.parametrize("b", [-1.0, 0.0, 4.0])
    def test_density_transport(self, a, b):
        p = GHParams(0.7, 2.0, -0.6, 1.2, 0.5)
        q = affine_transform(p, a, b)
        y = np.linspace(-10, 10, 41)
        np.testing.assert_allclose(gh_pdf(q, y), gh_pdf(p, (y - b) / a) / abs(a),
                                   rtol=1e-12)

    def test_zero_scale(self):
        with pytest.raises(ValueError):
            affine_transform(GHParams(1.0, 2.0, 0.5, 1.0), 0, 1)


class TestSampleSet:
    def test_csv_round_trip(self, tmp_path):
        s = SampleSet(np.array([0.1, -2.5, 1e-300, 3.0]))
        path = tmp_path / "s.csv"
        s.save(path)
        assert path.read_text().splitlines()[0] == "value"
        np.testing.assert_array_equal(SampleSet.load(path).values, s.values)

    def test_json_round_trip(self, tmp_path):
        p = GHParams(1.0, 2.0, 0.5, 1.0)
        s = gh_sample(p, 20, RandomStream(3))
        path = tmp_path / "s.json"
        s.save(path)
        back = SampleSet.load(path)
        np.testing.assert_array_equal(back.values, s.values)
        assert back.seed == 3
        assert GHParams.from_dict(back.params) == p

    def test_headerless_csv(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("1.5\n-2\n\n3e-2\n")
        np.testing.assert_array_equal(SampleSet.load(path).values, [1.5, -2.0, 0.03])
