"""Special functions against mpmath and their defining identities."""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from jointmoments import specfun
from jointmoments.errors import DomainError

mpmath.mp.dps = 30


@pytest.mark.parametrize("z", [0.1, 0.5, 1.0, 1.5, 2.0, 3.7, 7.25, 12.0, 20.5, 35.0, 80.0])
def test_log_barnes_g_matches_mpmath(z):
    ref = float(mpmath.log(mpmath.barnesg(z)))
    assert specfun.log_barnes_g(z) == pytest.approx(ref, rel=1e-13, abs=1e-13)


@pytest.mark.parametrize("n, value", [(1, 1), (2, 1), (3, 1), (4, 2), (5, 12), (6, 288), (7, 34560)])
def test_barnes_g_integers(n, value):
    assert specfun.barnes_g(n) == pytest.approx(value, rel=1e-13)


@given(st.floats(min_value=0.05, max_value=60.0))
@settings(max_examples=60, deadline=None)
def test_barnes_functional_equation(z):
    lhs = specfun.log_barnes_g(z + 1.0)
    rhs = specfun.log_gamma(z) + specfun.log_barnes_g(z)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("z", [0.5, 1.0, 2.5])
def test_barnes_product_agrees(z):
    # independent Weierstrass-product route
    assert specfun.barnes_g_product(z, n_terms=200_000) == pytest.approx(
        specfun.log_barnes_g(1.0 + z), abs=1e-10
    )


def test_barnes_rejects_nonpositive():
    with pytest.raises(DomainError):
        specfun.log_barnes_g(0.0)
    with pytest.raises(DomainError):
        specfun.log_gamma(-1.0)


@pytest.mark.parametrize("nu", [-0.75, -0.5, 0.0, 0.5, 1.5, 2.5, 4.0])
@pytest.mark.parametrize("z", [0.01, 0.3, 1.0, 7.0, 55.0])
def test_bessel_j_matches_mpmath(nu, z):
    ref = float(mpmath.besselj(nu, z))
    assert specfun.bessel_j(nu, z) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_bessel_j_domain():
    with pytest.raises(DomainError):
        specfun.bessel_j(-1.0, 1.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(0.5, 0.0)
    out = specfun.bessel_j(0.5, np.array([1.0, 2.0]))
    assert out.shape == (2,)


@pytest.mark.parametrize("n", [0, 1, 3, 6])
@pytest.mark.parametrize("z", [0.0, 0.5, 4.0])
def test_bessel_i_matches_mpmath(n, z):
    assert specfun.bessel_i(n, z) == pytest.approx(float(mpmath.besseli(n, z)), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("n", [0, 2, 5])
def test_bessel_i_sqrt_series(n):
    coeffs = specfun.bessel_i_sqrt_series(n, 25)
    assert all(isinstance(c, Fraction) for c in coeffs)
    t = 0.7
    series = sum(float(c) * t**k for k, c in enumerate(coeffs))
    assert series == pytest.approx(specfun.bessel_i(n, 2 * math.sqrt(t)) / t ** (n / 2), rel=1e-14)


@pytest.mark.parametrize("s", [-0.3, 0.0, 0.5, 1.0, 2.5])
def test_pearson_density_normalised(s):
    total, _ = integrate.quad(lambda x: specfun.pearson_iv_density(s, x), -np.inf, np.inf, limit=400)
    assert total == pytest.approx(1.0, rel=1e-8)


def test_pearson_cauchy_case():
    x = np.linspace(-20, 20, 41)
    np.testing.assert_allclose(specfun.pearson_iv_density(0.0, x), 1 / (np.pi * (1 + x**2)), rtol=1e-14)
    np.testing.assert_allclose(specfun.pearson_iv_cdf(0.0, x), 0.5 + np.arctan(x) / np.pi, rtol=1e-13)


@given(st.floats(min_value=-0.45, max_value=4.0), st.floats(min_value=-30, max_value=30))
@settings(max_examples=50, deadline=None)
def test_pearson_cdf_is_integral_of_density(s, x):
    ref, _ = integrate.quad(lambda u: specfun.pearson_iv_density(s, u), -np.inf, x, limit=400)
    assert specfun.pearson_iv_cdf(s, x) == pytest.approx(ref, abs=1e-8)
