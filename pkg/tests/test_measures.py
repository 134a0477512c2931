import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_nonreal
from rmtlimits import (
    Atoms,
    ComplexEvaluator,
    GridDensity,
    InputError,
    Mixture,
    Named,
    SpectralParameterError,
    cdf,
    empirical_measure,
    herglotz_eval,
    invert_stieltjes,
    ks_distance,
    nevanlinna_check,
    sample_gue,
    eigenvalues,
    semicircle_density,
    semicircle_stieltjes,
    solve_mp,
    stieltjes_derivative,
    stieltjes_eval,
    stieltjes_evaluator,
)

SEMICIRCLE_RHO0 = 0.22507907903927651  # sqrt(2)/(2 pi)


def semicircle_grid(points=4001):
    grid = np.linspace(-2 * math.sqrt(2), 2 * math.sqrt(2), points)
    return GridDensity.normalized(grid, semicircle_density(grid))


# --- construction --------------------------------------------------------------

def test_empirical_measure_counts_mass():
    m = empirical_measure([1.0, 2.0, 3.0])
    assert m.mass(1.5, 3.0) == pytest.approx(2 / 3, abs=1e-15)


def test_empirical_measure_coincident_values():
    m = empirical_measure([0.0, 0.0, 0.0])
    assert m.mass(0.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert np.all(m.locations == 0.0)


def test_empirical_measure_of_gue_sample():
    m = empirical_measure(eigenvalues(sample_gue(4, 1.0, seed=3)))
    assert m.size == 4
    assert np.allclose(m.weights, 0.25)


def test_empirical_measure_rejects_empty():
    with pytest.raises(InputError, match="empty spectrum"):
        empirical_measure([])


def test_atoms_reject_bad_mass_and_negative_weight():
    with pytest.raises(InputError):
        Atoms([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(InputError, match="index 1"):
        Atoms([0.0, 1.0, 2.0], [1.0, -0.5, 0.5])


def test_grid_density_invariants():
    with pytest.raises(InputError, match="index 1"):
        GridDensity([0.0, 1.0, 2.0], [0.5, -0.1, 0.5])
    with pytest.raises(InputError, match="strictly increasing"):
        GridDensity([0.0, 0.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(InputError, match="integrates"):
        GridDensity([0.0, 1.0], [2.0, 2.0])
    GridDensity([0.0, 1.0], [1.0, 1.0])


def test_mixture_and_named_validation():
    with pytest.raises(InputError):
        Mixture(((0.5, Atoms([0.0], [1.0])),))
    with pytest.raises(InputError):
        Named("nonexistent", {})
    with pytest.raises(InputError):
        Mixture(((0.5, Atoms([0.0], [1.0])), (0.5, Named("uniform_circle", {}))))


# --- Stieltjes transform -------------------------------------------------------

def test_stieltjes_single_atom():
    assert stieltjes_eval(Atoms([0.0], [1.0]), 1j) == pytest.approx(1j, abs=1e-15)


def test_stieltjes_semicircle_grid_at_i():
    assert stieltjes_eval(semicircle_grid(), 1j) == pytest.approx(0.5j, abs=1e-5)


@pytest.mark.parametrize("m", [
    Atoms([-1.0, 2.0], [0.3, 0.7]),
    Named("semicircle", {"w": 1.0}),
    Named("laguerre", {"a": 0.5}),
])
def test_stieltjes_large_imaginary_normalization(m):
    z = 1e6j
    assert abs(stieltjes_eval(m, z) * z + 1.0) <= 1e-5


def test_stieltjes_grid_large_imaginary():
    z = 1e6j
    assert abs(stieltjes_eval(semicircle_grid(), z) * z + 1.0) <= 1e-5


def test_stieltjes_rejects_real_parameter():
    with pytest.raises(SpectralParameterError, match="real spectral parameter"):
        stieltjes_eval(Atoms([0.0], [1.0]), 1.0 + 0j)


def test_stieltjes_derivative_matches_finite_difference(rng):
    m = semicircle_grid(801)
    z = random_nonreal(rng, 10, min_imag=0.2)
    h = 1e-5
    fd = (stieltjes_eval(m, z + h) - stieltjes_eval(m, z - h)) / (2 * h)
    assert np.max(np.abs(stieltjes_derivative(m, z) - fd)) < 1e-7


def test_mixture_transform_is_convex_combination():
    a, b = Atoms([1.0], [1.0]), Named("semicircle", {"w": 1.0})
    mix = Mixture(((0.25, a), (0.75, b)))
    z = 0.3 + 0.7j
    assert stieltjes_eval(mix, z) == pytest.approx(0.25 * stieltjes_eval(a, z) + 0.75 * stieltjes_eval(b, z))


MEASURES = [
    Atoms([-1.0, 0.5, 2.0], [0.2, 0.3, 0.5]),
    Named("semicircle", {"w": 0.7}),
    Named("laguerre", {"a": 1.2}),
    GridDensity.normalized(np.linspace(-1, 3, 201), np.exp(-np.linspace(-1, 3, 201) ** 2)),
    Mixture(((0.5, Atoms([0.0], [1.0])), (0.5, Named("semicircle", {"w": 1.0})))),
]


@pytest.mark.parametrize("m", MEASURES)
def test_nevanlinna_sign_property(m, rng):
    z = random_nonreal(rng, 100, min_imag=1e-3)
    f = stieltjes_eval(m, z)
    assert np.all(f.imag * z.imag > 0)


# --- Herglotz transform --------------------------------------------------------

def test_herglotz_at_zero_is_one():
    m = Atoms([0.3, 2.0], [0.4, 0.6], domain="circle")
    assert herglotz_eval(m, 0.0) == pytest.approx(1.0)


def test_herglotz_uniform_density_at_02():
    theta = np.linspace(0, 2 * math.pi, 2048, endpoint=False)
    m = GridDensity(theta, np.full(theta.size, 1 / (2 * math.pi)), domain="circle")
    assert abs(herglotz_eval(m, 0.2) - 1.0) < 1e-12


def test_herglotz_single_atom():
    assert herglotz_eval(Atoms([0.0], [1.0], domain="circle"), 0.5) == pytest.approx(3.0, abs=1e-15)


def test_herglotz_rejects_unit_circle():
    with pytest.raises(SpectralParameterError, match="on unit circle"):
        herglotz_eval(Named("uniform_circle", {}), np.exp(0.3j))


@given(r=st.floats(0.0, 0.9), phi=st.floats(0.0, 2 * math.pi))
def test_herglotz_uniform_is_one_inside_disc(r, phi):
    z = r * np.exp(1j * phi)
    assert abs(herglotz_eval(Named("uniform_circle", {}), z) - 1.0) <= 1e-10
    theta = np.linspace(0, 2 * math.pi, 512, endpoint=False)
    m = GridDensity(theta, np.full(theta.size, 1 / (2 * math.pi)), domain="circle")
    assert abs(herglotz_eval(m, z) - 1.0) <= 1e-10


# --- inversion -----------------------------------------------------------------

def test_inversion_of_point_mass_is_lorentzian():
    grid = np.linspace(-1, 1, 2001)
    eps = 1e-3
    raw = invert_stieltjes(lambda z: -1.0 / z, grid, eps, normalize=False)
    lorentz = eps / (math.pi * (grid ** 2 + eps ** 2))
    assert np.allclose(raw, lorentz, rtol=1e-10, atol=0)
    dens = invert_stieltjes(lambda z: -1.0 / z, grid, eps)
    assert dens.info["epsilon"] == eps
    assert grid[np.argmax(dens.values)] == 0.0
    half = dens.values >= 0.5 * dens.values.max() * (1 - 1e-9)
    assert grid[half].max() - grid[half].min() == pytest.approx(2 * eps, rel=0.05)


def test_inversion_semicircle_closed_form():
    grid = np.arange(-3000, 3001) * 1e-3
    dens = invert_stieltjes(semicircle_stieltjes, grid, 1e-4)
    assert np.max(np.abs(dens.values - semicircle_density(grid))) <= 5e-3


def test_inversion_of_mp_solver_at_two():
    sigma = Atoms([1.0], [1.0])
    f = ComplexEvaluator(func=lambda z: solve_mp(z, 1.0, sigma).f)
    raw = invert_stieltjes(f, np.array([2.0]), 1e-4, normalize=False)
    assert raw[0] == pytest.approx(1 / (2 * math.pi), abs=1e-4)


def test_inversion_negative_flag_warns():
    with pytest.warns(RuntimeWarning):
        dens = invert_stieltjes(lambda z: -1.0 / z + 0.2 / (z - 0.5), np.linspace(-1, 1, 201), 1e-2)
    assert dens.info["negative_flag"]


def test_inversion_round_trip_smooth_density():
    grid = np.linspace(-10, 10, 4001)
    vals = np.exp(-0.5 * (grid - 1.0) ** 2) + 0.5 * np.exp(-2 * (grid + 3) ** 2)
    m = GridDensity.normalized(grid, vals)
    back = invert_stieltjes(stieltjes_evaluator(m), grid, 1e-4)
    assert ks_distance(m, back).value <= 0.01


def test_inversion_rejects_nonpositive_epsilon():
    with pytest.raises(InputError):
        invert_stieltjes(lambda z: -1 / z, [0.0, 1.0], 0.0)


# --- Nevanlinna check ----------------------------------------------------------

def test_nevanlinna_check_examples():
    pts = [1j, 2j, 1 + 1j, -1 - 1j]
    assert nevanlinna_check(lambda z: -1.0 / z, pts).ok
    rep = nevanlinna_check(lambda z: 1.0 / z, pts)
    assert not rep.ok and len(rep.violations) == 4
    assert nevanlinna_check(semicircle_stieltjes, pts).ok


def test_nevanlinna_check_detects_wrong_mass():
    assert not nevanlinna_check(lambda z: -2.0 / z, [1j]).ok


# --- distances -----------------------------------------------------------------

def test_ks_examples():
    m = Atoms([0.0, 1.0], [0.5, 0.5])
    assert ks_distance(m, m).value == 0.0
    assert ks_distance(Atoms([0.0], [1.0]), Atoms([1.0], [1.0])).value == 1.0


def test_ks_rejects_mixed_domains():
    with pytest.raises(InputError):
        ks_distance(Atoms([0.0], [1.0]), Atoms([0.0], [1.0], domain="circle"))


def test_ks_gue_against_semicircle():
    eigs = eigenvalues(sample_gue(1024, 1.0, seed=11))
    assert ks_distance(empirical_measure(eigs), Named("semicircle", {"w": 1.0})).value <= 0.03


def test_cdf_of_grid_density_is_exact_for_linear_interpolant():
    m = GridDensity([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    assert cdf(m, 1.0) == pytest.approx(0.5)
    assert cdf(m, 0.5) == pytest.approx(0.125)


atom_lists = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=8)


@given(a=atom_lists, b=atom_lists, c=atom_lists)
def test_ks_is_pseudometric(a, b, c):
    ma, mb, mc = empirical_measure(a), empirical_measure(b), empirical_measure(c)
    dab, dba = ks_distance(ma, mb).value, ks_distance(mb, ma).value
    assert dab == pytest.approx(dba, abs=1e-12)
    assert ks_distance(ma, ma).value <= 1e-12
    assert dab <= ks_distance(ma, mc).value + ks_distance(mc, mb).value + 1e-12
    assert 0.0 <= dab <= 1.0


def test_evaluator_deriv_falls_back_to_finite_difference():
    f = ComplexEvaluator(func=lambda z: -1.0 / z)
    z = 0.5 + 0.8j
    assert f.deriv(z) == pytest.approx(1.0 / z ** 2, rel=1e-6)
