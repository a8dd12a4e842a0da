"""Special-function kernel: independent series/integral oracles, closed
forms, and the envelope/recurrence properties everything downstream leans
on."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from tracestab.specfun import (
    bessel_i,
    bessel_j,
    bessel_k,
    dim_harmonic,
    gamma,
    half_integer_j,
    landau_envelope_constant,
    legendre,
    legendre_all,
    order,
)


def j_series_oracle(nu: float, x: float, terms: int = 60) -> float:
    """Power series of the Bessel function of the first kind, summed far
    past machine precision for the small arguments used here."""
    total = 0.0
    for m in range(terms):
        total += (-1.0) ** m * (0.5 * x) ** (2 * m + nu) / (
            math.gamma(m + 1) * math.gamma(m + nu + 1.0)
        )
    return total


def i0_series_oracle(x: float, terms: int = 60) -> float:
    return sum((0.25 * x * x) ** m / math.gamma(m + 1) ** 2 for m in range(terms))


class TestGamma:
    def test_trivial_values(self):
        assert gamma(1.0) == pytest.approx(1.0, abs=1e-14)
        assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
        assert gamma(2.5) == pytest.approx(0.75 * math.sqrt(math.pi), rel=1e-13)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            gamma(0.0)
        with pytest.raises(ValueError):
            gamma(-1.5)

    @given(st.floats(0.1, 30.0))
    def test_recurrence(self, x):
        assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)


class TestBesselJ:
    def test_half_integer_value(self):
        assert bessel_j(0.5, math.pi / 2) == pytest.approx(2.0 / math.pi, rel=1e-12)

    def test_small_argument_limit(self):
        assert bessel_j(0.0, 1e-12) == pytest.approx(1.0, abs=1e-10)

    def test_series_oracle(self):
        assert bessel_j(1.0, 1.0) == pytest.approx(0.4400505857449335, rel=1e-12)
        for nu in (0.0, 0.5, 1.5, 3.0, 7.5):
            for x in (0.3, 1.0, 4.0):
                assert bessel_j(nu, x) == pytest.approx(j_series_oracle(nu, x), rel=1e-10)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            bessel_j(1.0, -2.0)

    def test_small_x_power_behavior(self):
        x = 1e-6
        for nu in (0.5, 1.0, 2.5, 6.0):
            lim = 1.0 / (2.0 ** nu * gamma(nu + 1.0))
            assert bessel_j(nu, x) / x ** nu == pytest.approx(lim, rel=1e-6)

    def test_half_integer_closed_forms(self, rng):
        for nu in (0.5, 1.5, 2.5, 3.5, 5.5, 7.5):
            for x in rng.uniform(0.2, 30.0, size=5):
                assert half_integer_j(nu, x) == pytest.approx(
                    bessel_j(nu, float(x)), rel=1e-9, abs=1e-12
                )

    def test_landau_envelope(self):
        c = landau_envelope_constant()
        assert c == 0.8
        r = np.linspace(1e-3, 1000.0, 20000)
        observed = 0.0
        for k in range(61):  # nu = 1/2, 1, ..., 30
            nu = 0.5 * (k + 1)
            observed = max(observed, float(np.max(np.abs(bessel_j(nu, r)) * r ** (1.0 / 3.0))))
        assert observed < c
        # the envelope is not wastefully loose
        assert observed > 0.6


class TestBesselIK:
    def test_half_integer_values(self):
        assert bessel_i(0.5, 1.0) == pytest.approx(
            math.sqrt(2.0 / math.pi) * math.sinh(1.0), rel=1e-12
        )
        assert bessel_k(0.5, 1.0) == pytest.approx(
            math.sqrt(math.pi / 2.0) / math.e, rel=1e-12
        )

    def test_product_series_integral_oracle(self):
        k0_oracle, _ = quad(lambda t: math.exp(-math.cosh(t)), 0.0, 30.0)
        prod = bessel_i(0.0, 1.0) * bessel_k(0.0, 1.0)
        assert prod == pytest.approx(i0_series_oracle(1.0) * k0_oracle, rel=1e-10)
        assert f"{prod:.4f}" == "0.5330"

    def test_monotonicity(self):
        xs = np.linspace(0.2, 8.0, 50)
        for nu in (0.0, 0.5, 2.0):
            iv = np.array([bessel_i(nu, x) for x in xs])
            kv = np.array([bessel_k(nu, x) for x in xs])
            assert np.all(np.diff(iv) > 0)
            assert np.all(np.diff(kv) < 0)

    def test_wronskian(self, rng):
        for nu in (0.0, 0.5, 1.0, 2.5, 6.0):
            for x in rng.uniform(0.1, 20.0, size=8):
                x = float(x)
                w = bessel_i(nu, x) * bessel_k(nu + 1.0, x) + \
                    bessel_i(nu + 1.0, x) * bessel_k(nu, x)
                assert w == pytest.approx(1.0 / x, rel=1e-9)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            bessel_i(1.0, -1.0)
        with pytest.raises(ValueError):
            bessel_k(1.0, -1.0)


class TestLegendre:
    def test_degree_zero_and_one(self):
        for n in (2, 3, 4, 7):
            for t in (-1.0, -0.4, 0.0, 0.9, 1.0):
                assert legendre(n, 0, t) == pytest.approx(1.0, abs=1e-14)
                assert legendre(n, 1, t) == pytest.approx(t, abs=1e-14)

    def test_classical_n3(self):
        for t in np.linspace(-1, 1, 21):
            assert legendre(3, 2, t) == pytest.approx((3 * t * t - 1) / 2, abs=1e-13)
            assert legendre(3, 3, t) == pytest.approx((5 * t ** 3 - 3 * t) / 2, abs=1e-13)

    def test_chebyshev_n2(self):
        for k in range(8):
            for t in np.linspace(-1, 1, 17):
                assert legendre(2, k, t) == pytest.approx(
                    math.cos(k * math.acos(t)), abs=1e-11
                )

    def test_normalization_at_one(self):
        for n in (2, 3, 5):
            for k in range(25):
                assert legendre(n, k, 1.0) == pytest.approx(1.0, rel=1e-11)

    @given(st.integers(2, 6), st.integers(1, 30), st.floats(-1.0, 1.0))
    def test_bounded_by_one(self, n, k, t):
        assert abs(legendre(n, k, t)) <= 1.0 + 1e-11

    def test_legendre_all_consistency(self):
        t = np.linspace(-1, 1, 31)
        table = legendre_all(4, 10, t)
        for k in (0, 3, 10):
            assert np.allclose(table[k], [legendre(4, k, tt) for tt in t], atol=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            legendre(3, 2, 1.5)


class TestIndexing:
    def test_order(self):
        assert order(3, 0) == 0.5
        assert order(2, 4) == 4.0
        assert order(4, 1) == 2.0

    def test_dim_harmonic(self):
        assert dim_harmonic(2, 0) == 1
        assert dim_harmonic(2, 5) == 2
        for k in range(8):
            assert dim_harmonic(3, k) == 2 * k + 1
        assert dim_harmonic(4, 2) == 9
