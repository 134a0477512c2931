import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from rmtlimits import (
    InputError,
    MonomialLaw,
    PotentialPolynomial,
    equilibrium_density,
    equilibrium_mass,
    equilibrium_measure,
    equilibrium_polynomial,
    monomial_density,
    monomial_integral,
    monomial_support,
    semicircle_density,
    singular_quadrature,
    solve_support,
    verify_singular_equation,
)

QUARTIC_EDGE = (16 / 3) ** 0.25  # 1.5196713713031853
GAUSS = PotentialPolynomial([0, 0, 0.25])
QUARTIC = PotentialPolynomial([0, 0, 0, 0, 0.25])


# --- potentials ----------------------------------------------------------------

def test_potential_validation():
    assert PotentialPolynomial([0, 0, 0.25]).degree == 2
    assert PotentialPolynomial([0, 0, 1, 0, 0]).degree == 2
    with pytest.raises(InputError, match="convex polynomial of an even degree"):
        PotentialPolynomial([0, 1])
    with pytest.raises(InputError, match="convex polynomial of an even degree"):
        PotentialPolynomial([0, 0, 0, 1])
    with pytest.raises(InputError, match="positive leading coefficient"):
        PotentialPolynomial([0, 0, -1])
    with pytest.raises(InputError, match="not convex"):
        PotentialPolynomial([0, 0, -1, 0, 0.1])


# --- quadrature ----------------------------------------------------------------

def test_singular_quadrature_examples():
    assert singular_quadrature(lambda m: np.ones_like(m), -1.0, 3.0) == pytest.approx(math.pi, abs=1e-14)
    assert abs(singular_quadrature(lambda m: m, -2.5, 2.5)) <= 1e-14
    assert singular_quadrature(lambda m: m ** 2, -2.0, 2.0) == pytest.approx(2 * math.pi, abs=1e-13)
    with pytest.raises(InputError):
        singular_quadrature(lambda m: m, 1.0, 1.0)


@given(k=st.integers(0, 20), a=st.floats(-3, 0), width=st.floats(0.1, 4))
def test_singular_quadrature_polynomial_exactness(k, a, width):
    b = a + width
    ref, _ = integrate.quad(lambda m: m ** k, a, b, weight="alg", wvar=(-0.5, -0.5), epsabs=1e-13, epsrel=1e-13)
    got = singular_quadrature(lambda m: m ** k, a, b)
    assert got == pytest.approx(ref, rel=1e-10, abs=1e-12)


# --- support -------------------------------------------------------------------

def test_gaussian_support():
    s = solve_support(GAUSS)
    assert s.a == pytest.approx(-2 * math.sqrt(2), abs=1e-12)
    assert s.b == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert max(s.residuals) <= 1e-10


def test_quartic_support():
    s = solve_support(QUARTIC)
    assert s.b == pytest.approx(QUARTIC_EDGE, abs=1e-12)
    assert s.a == pytest.approx(-QUARTIC_EDGE, abs=1e-12)
    assert abs(s.b ** 4 - 16 / 3) <= 1e-8


@pytest.mark.parametrize("shift", [-1.3, 0.0, 0.7, 2.5])
def test_shifted_gaussian_support(shift):
    s = solve_support(PotentialPolynomial([0, -shift, 0.5]))
    assert s.a == pytest.approx(shift - 2, abs=1e-12)
    assert s.b == pytest.approx(shift + 2, abs=1e-12)


@given(c1=st.floats(-1, 1), c3=st.floats(-0.1, 0.1), c4=st.floats(0.05, 1))
def test_support_residuals_and_mass(c1, c3, c4):
    try:
        v = PotentialPolynomial([0, c1, 0.5, c3, c4])
    except InputError:
        return
    s = solve_support(v)
    assert max(s.residuals) <= 1e-10
    assert equilibrium_mass(v, s) == pytest.approx(1.0, abs=1e-8)
    x = np.linspace(s.a, s.b, 1000)[1:-1]
    assert np.all(np.polynomial.polynomial.polyval(x, equilibrium_polynomial(v, s)) > 0)


# --- density -------------------------------------------------------------------

def test_gaussian_reduction():
    s = solve_support(GAUSS)
    x = np.linspace(-3, 3, 1201)
    assert np.max(np.abs(equilibrium_density(GAUSS, s, x) - semicircle_density(x, 1.0, 2))) <= 1e-10
    assert equilibrium_density(GAUSS, s, 0.0) == pytest.approx(math.sqrt(2) / (2 * math.pi), abs=1e-14)


@pytest.mark.parametrize("w", [0.5, 2.0])
def test_gaussian_reduction_scaled(w):
    v = PotentialPolynomial([0, 0, 1 / (4 * w * w)])
    s = solve_support(v)
    x = np.linspace(-3 * w, 3 * w, 301)
    assert np.max(np.abs(equilibrium_density(v, s, x) - semicircle_density(x, w, 2))) <= 1e-10


def test_quartic_density_examples():
    s = solve_support(QUARTIC)
    assert equilibrium_density(QUARTIC, s, 0.0) == pytest.approx(QUARTIC_EDGE ** 3 / (4 * math.pi), abs=1e-12)
    assert equilibrium_density(QUARTIC, s, s.b) == 0.0
    assert equilibrium_density(QUARTIC, s, 2.0) == 0.0


def test_normalization():
    for v in (GAUSS, QUARTIC, PotentialPolynomial([1, 0.3, 0.5, 0.1, 0.2, 0, 0.05])):
        s = solve_support(v)
        assert equilibrium_mass(v, s) == pytest.approx(1.0, abs=1e-8)
        assert equilibrium_measure(v, s).info["raw_mass"] == pytest.approx(1.0, abs=1e-6)


# --- monomial closed form -------------------------------------------------------

def test_monomial_examples():
    assert monomial_integral(2) == pytest.approx(math.pi / 4, abs=1e-15)
    assert monomial_integral(4) == pytest.approx(3 * math.pi / 16, abs=1e-15)
    assert monomial_integral(1) == pytest.approx(1.0, abs=1e-15)
    assert monomial_support(2) == pytest.approx(2.0, abs=1e-14)
    assert monomial_density(2, 0.0) == pytest.approx(1 / math.pi, abs=1e-12)
    assert monomial_support(4) ** 4 == pytest.approx(16 / 3, abs=1e-12)
    assert monomial_density(4, monomial_support(4)) == 0.0
    with pytest.raises(InputError):
        MonomialLaw(1.5)


@pytest.mark.parametrize("alpha", [2.0, 2.5, 3.0, 4.0, 7.3])
def test_monomial_endpoint_invariant(alpha):
    law = MonomialLaw(alpha)
    assert law.endpoint ** alpha == pytest.approx(math.pi / monomial_integral(alpha), rel=1e-12)


@pytest.mark.parametrize("alpha", [2, 4, 6])
def test_monomial_matches_equilibrium(alpha):
    v = PotentialPolynomial([0] * alpha + [1 / alpha])
    s = solve_support(v)
    assert s.b == pytest.approx(monomial_support(alpha), abs=1e-12)
    x = np.linspace(-s.b, s.b, 81)
    assert np.max(np.abs(monomial_density(alpha, x) - equilibrium_density(v, s, x))) <= 1e-6


def test_noninteger_monomial_mass():
    alpha = 3.0
    a = monomial_support(alpha)
    mass, _ = integrate.quad(lambda x: monomial_density(alpha, x), -a, a, epsabs=1e-10)
    assert mass == pytest.approx(1.0, abs=1e-7)


# --- singular equation ----------------------------------------------------------

def test_singular_equation_gaussian():
    rep = verify_singular_equation(GAUSS, solve_support(GAUSS))
    assert rep.points.size == 50
    assert rep.max_deviation <= 1e-6


def test_singular_equation_quartic_and_general():
    assert verify_singular_equation(QUARTIC, solve_support(QUARTIC)).max_deviation <= 1e-4
    v = PotentialPolynomial([0, 0.4, 0.5, 0.1, 0.1])
    assert verify_singular_equation(v, solve_support(v)).max_deviation <= 1e-4


def test_singular_equation_detects_wrong_density():
    s = solve_support(QUARTIC)
    p = equilibrium_polynomial(QUARTIC, s)

    def wrong(m):
        return 2.0 * (p[0] + p[2] * m * m) * math.sqrt(max((s.b - m) * (m - s.a), 0.0))

    assert verify_singular_equation(QUARTIC, s, points=[-0.5, 0.0, 0.9], density=wrong).max_deviation > 0.1


def test_singular_equation_rejects_exterior_points():
    s = solve_support(GAUSS)
    with pytest.raises(InputError):
        verify_singular_equation(GAUSS, s, points=[3.0])
