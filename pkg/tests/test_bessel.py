import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from ghstein.bessel import (asymptotic_coeff, asymptotic_i, asymptotic_k, bessel_i,
                            bessel_i_derivative, bessel_i_scaled, bessel_k,
                            bessel_k_derivative, bessel_k_scaled, log_bessel_k)
from helpers import richardson


def k_integral(nu, x):
    """K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt, brute force."""
    def f(t):
        c = -x * math.cosh(t)
        return 0.5 * (math.exp(c + nu * t) + math.exp(c - nu * t))

    top = 1.0
    while -x * math.cosh(top) + abs(nu) * top > -750:
        top += 1.0
    val, _ = integrate.quad(f, 0, top, epsabs=0, epsrel=1e-13, limit=500)
    return val


class TestHalfInteger:
    def test_k_half_closed_form(self):
        x = np.linspace(0.1, 50, 2000)
        exact = np.sqrt(np.pi / (2 * x)) * np.exp(-x)
        np.testing.assert_allclose(bessel_k(0.5, x), exact, rtol=1e-12)

    def test_k_half_scaled(self):
        x = np.geomspace(1e-3, 1e4, 200)
        np.testing.assert_allclose(bessel_k_scaled(0.5, x), np.sqrt(np.pi / (2 * x)),
                                   rtol=1e-13)

    def test_k_half_at_two(self):
        assert bessel_k(0.5, 2.0) == pytest.approx(math.sqrt(math.pi / 4) * math.exp(-2),
                                                    rel=1e-14)

    def test_i_half(self):
        x = np.linspace(0.05, 30, 300)
        np.testing.assert_allclose(bessel_i(0.5, x), np.sqrt(2 / (np.pi * x)) * np.sinh(x),
                                   rtol=1e-12)
        assert bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0),
                                                    rel=1e-14)

    def test_k_three_halves(self):
        x = np.linspace(0.1, 20, 100)
        exact = np.sqrt(np.pi / (2 * x)) * np.exp(-x) * (1 + 1 / x)
        np.testing.assert_allclose(bessel_k(1.5, x), exact, rtol=1e-12)


class TestAgainstOracles:
    @pytest.mark.parametrize("nu,x", [(1.0, 2.0), (0.0, 0.3), (2.7, 5.0), (0.25, 0.01),
                                      (7.5, 3.0), (1e-7, 1.0), (3.0, 29.0)])
    def test_integral_representation(self, nu, x):
        assert bessel_k(nu, x) == pytest.approx(k_integral(nu, x), rel=1e-12)

    def test_scipy_k(self):
        nu = np.linspace(-8, 8, 33)[:, None]
        x = np.geomspace(1e-3, 30, 60)[None, :]
        np.testing.assert_allclose(bessel_k(nu, x), special.kv(nu, x), rtol=1e-12)

    def test_scipy_i(self):
        nu = np.linspace(0, 8, 33)[:, None]
        x = np.geomspace(1e-3, 30, 60)[None, :]
        np.testing.assert_allclose(bessel_i(nu, x), special.iv(nu, x), rtol=1e-12)

    def test_scipy_i_negative_order(self):
        nu = np.array([-0.3, -1.5, -2.25, -4.75])[:, None]
        x = np.geomspace(0.1, 30, 40)[None, :]
        np.testing.assert_allclose(bessel_i(nu, x), special.iv(nu, x), rtol=1e-11)

    def test_scaled_large_argument(self):
        nu = np.array([0.0, 0.5, 1.0, 3.3, 10.0])[:, None]
        x = np.geomspace(30, 1e5, 40)[None, :]
        np.testing.assert_allclose(bessel_k_scaled(nu, x), special.kve(nu, x), rtol=1e-12)
        np.testing.assert_allclose(bessel_i_scaled(nu, x), special.ive(nu, x), rtol=1e-10)

    def test_near_integer_order(self):
        for nu in (1 - 1e-9, 1.0, 1 + 1e-9, 2 - 3e-7):
            assert bessel_k(nu, 1.3) == pytest.approx(special.kv(nu, 1.3), rel=1e-12)


class TestIdentities:
    @given(st.floats(0, 12), st.floats(1e-3, 40))
    @settings(max_examples=200, deadline=None)
    def test_k_symmetric_in_order(self, nu, x):
        assert bessel_k(-nu, x) == bessel_k(nu, x)

    def test_symmetry_example(self):
        assert bessel_k(-3.2, 5.0) == bessel_k(3.2, 5.0)

    @given(st.floats(-6, 6, allow_subnormal=False), st.floats(0.01, 60))
    @settings(max_examples=200, deadline=None)
    def test_scaled_product(self, nu, x):
        prod = bessel_k_scaled(nu, x) * bessel_i_scaled(nu, x)
        assert prod == pytest.approx(special.kv(nu, x) * special.iv(nu, x), rel=1e-10)

    def test_i_at_zero(self):
        assert bessel_i(0, 0) == 1.0
        assert bessel_i(2.5, 0.0) == 0.0

    def test_log_k_no_underflow(self):
        assert log_bessel_k(1.0, 1e4) == pytest.approx(
            math.log(special.kve(1.0, 1e4)) - 1e4, rel=1e-14)

    @pytest.mark.parametrize("nu", [0.0, 0.7, 2.0, -1.3])
    def test_ladder_derivatives(self, nu):
        for x in (0.2, 1.0, 7.0):
            assert bessel_k_derivative(nu, x) == pytest.approx(special.kvp(nu, x), rel=1e-11)
            assert bessel_i_derivative(nu, x) == pytest.approx(special.ivp(nu, x), rel=1e-11)

    def test_wronskian_nonnegative_orders(self):
        for nu in np.linspace(0, 5, 21):
            for x in np.geomspace(0.1, 30, 30):
                w = (bessel_k(nu, x) * richardson(lambda t: bessel_i(nu, t), x)
                     - richardson(lambda t: bessel_k(nu, t), x) * bessel_i(nu, x))
                assert abs(w - 1 / x) <= 1e-10

    def test_wronskian_analytic_relative(self):
        # relative to the size of the two cancelling products
        for nu in np.linspace(-5, 5, 41):
            x = np.geomspace(0.1, 30, 30)
            a = bessel_k(nu, x) * bessel_i_derivative(nu, x)
            b = bessel_k_derivative(nu, x) * bessel_i(nu, x)
            scale = np.abs(a) + np.abs(b)
            assert np.all(np.abs(a - b - 1 / x) <= 1e-13 * scale)

    @pytest.mark.parametrize("nu", [-4.75, -2.0, -0.5, 0.0, 1.0, 2.5, 5.0])
    def test_bessel_ode(self, nu):
        for fn in (bessel_k, bessel_i):
            for x in np.geomspace(0.1, 30, 15):
                r = fn(nu, x)
                r1 = richardson(lambda t: fn(nu, t), x, 1)
                r2 = richardson(lambda t: fn(nu, t), x, 2)
                res = x * x * r2 + x * r1 - (x * x + nu * nu) * r
                assert abs(res) <= 1e-6 * abs(r) * x * x


class TestLimits:
    @pytest.mark.parametrize("nu", [0.5, 1.0, 1.5, 2.5, 4.0])
    def test_small_x(self, nu):
        x = 1e-6
        ratio = bessel_k(nu, x) * x ** nu / (2 ** (nu - 1) * math.gamma(nu))
        assert ratio == pytest.approx(1.0, abs=1e-5)

    def test_small_x_k0(self):
        xs = np.array([1e-5, 1e-20, 1e-100, 1e-300])
        ratio = bessel_k(0.0, xs) / -np.log(xs)
        assert np.all(np.diff(np.abs(ratio - 1)) < 0)
        assert abs(ratio[-1] - 1) < 1e-3
        np.testing.assert_allclose(bessel_k(0.0, xs), -np.log(xs / 2) - np.euler_gamma,
                                   rtol=1e-9)

    @pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 2.5])
    def test_asymptotic_ratio_at_100(self, nu):
        assert bessel_k(nu, 100.0) / asymptotic_k(nu, 100.0, terms=3) == pytest.approx(
            1.0, abs=1e-4)

    @pytest.mark.parametrize("nu", [0.0, 1.0, 3.0])
    def test_scaled_i_large_x(self, nu):
        x = np.array([1e3, 1e4, 1e5])
        err = np.abs(bessel_i_scaled(nu, x) * np.sqrt(2 * np.pi * x) - 1)
        assert np.all(err <= (4 * nu * nu + 1) / x)
        np.testing.assert_allclose(bessel_i_scaled(nu, x), asymptotic_i(nu, x, scaled=True),
                                   rtol=1e-12)


class TestAsymptoticCoefficients:
    @given(st.floats(-10, 10))
    def test_low_order(self, nu):
        assert asymptotic_coeff(nu, 0) == 1.0
        assert asymptotic_coeff(nu, 1) == pytest.approx((4 * nu * nu - 1) / 8, rel=1e-14,
                                                        abs=1e-15)

    def test_half_vanishes(self):
        assert all(asymptotic_coeff(0.5, k) == 0 for k in range(1, 12))

    def test_product_formula(self):
        nu = 1.7
        for k in range(6):
            prod = np.prod([4 * nu * nu - (2 * j - 1) ** 2 for j in range(1, k + 1)])
            assert asymptotic_coeff(nu, k) == pytest.approx(
                prod / (math.factorial(k) * 8 ** k), rel=1e-13)

    def test_bad_k(self):
        with pytest.raises(ValueError):
            asymptotic_coeff(1.0, -1)


class TestErrors:
    def test_k_domain(self):
        with pytest.raises(ValueError):
            bessel_k(1.0, 0.0)
        with pytest.raises(ValueError):
            bessel_k_scaled(1.0, -2.0)

    def test_i_domain(self):
        with pytest.raises(ValueError):
            bessel_i(1.0, -1e-3)

    def test_i_overflow_signalled(self):
        with pytest.raises(OverflowError):
            bessel_i(0.0, 800.0)
        assert np.isfinite(bessel_i_scaled(0.0, 800.0))

    def test_k_underflow(self):
        assert bessel_k(0.0, 800.0) == 0.0
