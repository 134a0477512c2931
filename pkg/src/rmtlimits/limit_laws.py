"""Limiting spectral laws and solvers for their Stieltjes transforms.

Closed forms
    semicircle (scale ``w``, symmetry class ``beta``): ``f`` solves
    ``beta w^2 f^2 + z f + 1 = 0``, support ``|l| <= 2 sqrt(beta) w``;
    Laguerre (scale ``a``): ``beta a^2 z f^2 + z f + 1 = 0``, support
    ``[0, 4 beta a^2]``; the uniform law on the unit circle.

Functional equations (solved numerically)
    Marchenko-Pastur:       ``f = f0(z - c int t sigma(dt) / (1 + t f))``
    deformed semicircle:    ``f = f0(z + 2 w^2 f)``
    deformed Laguerre:      ``f = f0(z - 2 a^2 / (1 + 2 a^2 f))``

All solvers run a damped fixed-point iteration (with a safeguarded Newton
polish) and reach points close to the real axis by continuation in
``Im z``, starting at ``cfg.y_start`` and halving the distance at each
level while reusing the previous solution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import DEFAULT_CONFIG
from .errors import ConvergenceError, InputError, PoleError, SpectralParameterError
from .measures import Atoms, ComplexEvaluator, GridDensity, Mixture, Named

__all__ = [
    "FixedPointResult",
    "SemicircleLaw",
    "LaguerreLaw",
    "UniformCircleLaw",
    "named_law",
    "semicircle_density",
    "semicircle_stieltjes",
    "laguerre_density",
    "laguerre_stieltjes",
    "circular_limit_herglotz",
    "mp_atom_mass",
    "solve_mp",
    "solve_deformed_semicircle",
    "solve_deformed_laguerre",
    "mp_evaluator",
    "deformed_semicircle_evaluator",
    "deformed_laguerre_evaluator",
]

CONTINUATION_RATIO = 0.5
BETAS = (1, 2, 4)


@dataclass(frozen=True)
class FixedPointResult:
    """Solution of a functional equation at one or many spectral parameters.

    ``f``, ``iterations`` and ``residual`` are scalars for scalar input and
    arrays otherwise. ``iterations`` counts all continuation levels.
    """

    f: complex | np.ndarray
    iterations: int | np.ndarray
    residual: float | np.ndarray


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def _check_beta(beta):
    if beta not in BETAS:
        raise InputError(f"beta must be one of {BETAS}, got {beta!r}")
    return int(beta)


def _check_positive(name, value):
    value = float(value)
    if not value > 0 or not math.isfinite(value):
        raise InputError(f"{name} must be a positive finite number")
    return value


def _nonreal(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag == 0):
        raise SpectralParameterError("real spectral parameter")
    return z


def _nevanlinna_root(a, b, z):
    """Root of ``a f^2 + b f + 1 = 0`` with ``Im f * Im z > 0``.

    The two roots always lie in opposite half-planes for the quadratics
    used here, so the sign test selects a unique branch.
    """
    disc = np.sqrt(b * b - 4.0 * a)
    sgn = np.where((np.conj(b) * disc).real >= 0, 1.0, -1.0)
    q = -0.5 * (b + sgn * disc)
    r1 = q / a
    r2 = 1.0 / q
    return np.where(r1.imag * z.imag > 0, r1, r2)


def _scalar(out):
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def semicircle_density(lam, w=1.0, beta=2):
    """Semicircle density ``sqrt(4 beta w^2 - l^2) / (2 beta pi w^2)``."""
    w = _check_positive("w", w)
    beta = _check_beta(beta)
    lam = np.asarray(lam, dtype=float)
    r2 = 4.0 * beta * w * w
    out = np.sqrt(np.clip(r2 - lam * lam, 0.0, None)) / (2.0 * beta * math.pi * w * w)
    return _scalar(out)


def semicircle_stieltjes(z, w=1.0, beta=2):
    """Stieltjes transform of the semicircle law.

    For ``beta = 2`` this is ``(sqrt(z^2 - 8 w^2) - z) / (4 w^2)`` on the
    branch that behaves like ``-1/z`` at infinity.
    """
    w = _check_positive("w", w)
    beta = _check_beta(beta)
    z = _nonreal(z)
    return _scalar(_nevanlinna_root(beta * w * w, z, z))


def _semicircle_cdf(x, w, beta):
    r = 2.0 * math.sqrt(beta) * w
    x = np.clip(np.asarray(x, dtype=float), -r, r)
    return 0.5 + (x * np.sqrt(r * r - x * x)) / (math.pi * r * r) + np.arcsin(x / r) / math.pi


def laguerre_density(lam, a=1.0, beta=2):
    """Laguerre density ``sqrt((4 beta a^2 - l) / l) / (2 beta pi a^2)`` on ``(0, 4 beta a^2]``."""
    a = _check_positive("a", a)
    beta = _check_beta(beta)
    lam = np.asarray(lam, dtype=float)
    top = 4.0 * beta * a * a
    inside = (lam > 0) & (lam <= top)
    safe = np.where(inside, lam, 1.0)
    out = np.where(inside, np.sqrt(np.clip(top - safe, 0.0, None) / safe), 0.0) / (2.0 * beta * math.pi * a * a)
    return _scalar(out)


def laguerre_stieltjes(z, a=1.0, beta=2):
    """Stieltjes transform of the Laguerre law, root of ``beta a^2 z f^2 + z f + 1 = 0``."""
    a = _check_positive("a", a)
    beta = _check_beta(beta)
    z = _nonreal(z)
    return _scalar(_nevanlinna_root(beta * a * a * z, z, z))


def _laguerre_cdf(x, a, beta):
    top = 4.0 * beta * a * a
    x = np.clip(np.asarray(x, dtype=float), 0.0, top)
    phi = np.arcsin(np.sqrt(x / top))
    return (2.0 / math.pi) * (phi + np.sin(phi) * np.cos(phi))


def circular_limit_herglotz(z):
    """Herglotz transform of the uniform law on the unit circle: ``+1`` inside, ``-1`` outside."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    if np.any(np.abs(r - 1.0) <= 1e-12):
        raise SpectralParameterError("spectral parameter on unit circle")
    return _scalar(np.where(r < 1.0, 1.0 + 0j, -1.0 + 0j))


# ---------------------------------------------------------------------------
# named-law objects used by measures.Named
# ---------------------------------------------------------------------------

class SemicircleLaw:
    domain = "real"

    def __init__(self, w=1.0, beta=2):
        self.w = _check_positive("w", w)
        self.beta = _check_beta(beta)
        self.radius = 2.0 * math.sqrt(self.beta) * self.w

    @property
    def support(self):
        return (-self.radius, self.radius)

    def density(self, x):
        return semicircle_density(x, self.w, self.beta)

    def stieltjes(self, z):
        return semicircle_stieltjes(z, self.w, self.beta)

    def stieltjes_derivative(self, z):
        f = np.asarray(self.stieltjes(z))
        return _scalar(-f / (2.0 * self.beta * self.w ** 2 * f + np.asarray(z)))

    def herglotz(self, z):
        raise InputError("semicircle is a real-line law")

    def cdf(self, x):
        return _scalar(_semicircle_cdf(x, self.w, self.beta))

    def evaluation_grid(self, n=4001):
        r = self.radius
        return r * np.cos(np.linspace(math.pi, 0.0, n))

    def quadrature(self, k=512):
        # Gauss-Chebyshev of the second kind, exact for the sqrt weight.
        j = np.arange(1, k + 1)
        theta = j * math.pi / (k + 1)
        wts = np.sin(theta) ** 2
        return self.radius * np.cos(theta), wts / wts.sum()


class LaguerreLaw:
    domain = "real"

    def __init__(self, a=1.0, beta=2):
        self.a = _check_positive("a", a)
        self.beta = _check_beta(beta)
        self.top = 4.0 * self.beta * self.a ** 2

    @property
    def support(self):
        return (0.0, self.top)

    def density(self, x):
        return laguerre_density(x, self.a, self.beta)

    def stieltjes(self, z):
        return laguerre_stieltjes(z, self.a, self.beta)

    def stieltjes_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        f = np.asarray(self.stieltjes(z))
        k = self.beta * self.a ** 2
        return _scalar(-(k * f * f + f) / (2.0 * k * z * f + z))

    def herglotz(self, z):
        raise InputError("Laguerre law is a real-line law")

    def cdf(self, x):
        return _scalar(_laguerre_cdf(x, self.a, self.beta))

    def evaluation_grid(self, n=4001):
        return self.top * np.sin(np.linspace(0.0, 0.5 * math.pi, n)) ** 2

    def quadrature(self, k=512):
        # l = top sin^2(phi) turns the law into (4/pi) cos^2(phi) dphi on [0, pi/2].
        x, w = np.polynomial.legendre.leggauss(k)
        phi = 0.25 * math.pi * (x + 1.0)
        wts = w * np.cos(phi) ** 2
        return self.top * np.sin(phi) ** 2, wts / wts.sum()


class UniformCircleLaw:
    domain = "circle"

    def density(self, theta):
        return _scalar(np.full(np.shape(theta), 1.0 / (2.0 * math.pi)))

    def stieltjes(self, z):
        raise InputError("uniform_circle is a circular law")

    stieltjes_derivative = stieltjes

    def herglotz(self, z):
        return circular_limit_herglotz(z)

    def cdf(self, x):
        return _scalar(np.clip(np.asarray(x, dtype=float), 0.0, 2.0 * math.pi) / (2.0 * math.pi))

    def evaluation_grid(self, n=4001):
        return np.linspace(0.0, 2.0 * math.pi, n)


_LAWS = {
    "semicircle": (SemicircleLaw, {"w", "beta"}),
    "laguerre": (LaguerreLaw, {"a", "beta"}),
    "uniform_circle": (UniformCircleLaw, set()),
}


def named_law(name, params=None):
    """Instantiate a closed-form law from its identifier and parameter map."""
    params = dict(params or {})
    if name not in _LAWS:
        raise InputError(f"unknown law {name!r}; expected one of {sorted(_LAWS)}")
    cls, allowed = _LAWS[name]
    extra = set(params) - allowed
    if extra:
        raise InputError(f"unknown parameters for {name}: {sorted(extra)}")
    if "beta" in params:
        b = params["beta"]
        if isinstance(b, float) and b.is_integer():
            params["beta"] = int(b)
    return cls(**params)


# ---------------------------------------------------------------------------
# functional-equation solvers
# ---------------------------------------------------------------------------

def _population_nodes(sigma):
    """Quadrature nodes and weights ``(t, p)`` representing ``sigma``."""
    if isinstance(sigma, Atoms):
        return sigma.locations, sigma.weights
    if isinstance(sigma, GridDensity):
        return sigma.grid, sigma.values * sigma.quadrature_weights()
    if isinstance(sigma, Named):
        law = sigma.law
        if law.domain != "real":
            raise InputError("population spectrum must live on the real line")
        return law.quadrature()
    if isinstance(sigma, Mixture):
        parts = [_population_nodes(m) for _, m in sigma.components]
        t = np.concatenate([p[0] for p in parts])
        p = np.concatenate([w * p[1] for (w, _), p in zip(sigma.components, parts)])
        return t, p
    raise InputError(f"not a spectral measure: {sigma!r}")


def mp_atom_mass(c, sigma):
    """Mass of the atom at 0 in the Marchenko-Pastur law: ``max(0, 1 - c (1 - sigma({0})))``."""
    t, p = _population_nodes(sigma)
    zero = math.fsum(p[t == 0.0])
    return max(0.0, 1.0 - float(c) * (1.0 - zero))


def _levels(y, cfg):
    """Continuation heights, each row one level, ending at the target ``y``."""
    floor = np.maximum(y, cfg.y_min)
    lowest = float(floor.min())
    heights = [cfg.y_start]
    while heights[-1] > lowest:
        heights.append(heights[-1] * CONTINUATION_RATIO)
    rows = [np.where(y >= cfg.y_start, y, np.maximum(h, floor)) for h in heights]
    if np.any(y < cfg.y_min):
        rows.append(y)
    return rows


def _continuation(z, level_solver, cfg):
    """Drive ``level_solver(z_level, f_start)`` down to ``z`` by continuation in ``Im z``."""
    z = _nonreal(z)
    shape = z.shape
    zf = z.ravel()
    y = np.abs(zf.imag)
    sgn = np.sign(zf.imag)
    f = None
    total = np.zeros(zf.shape, dtype=np.int64)
    for row in _levels(y, cfg):
        zl = zf.real + 1j * sgn * row
        start = -1.0 / zl if f is None else f
        f, it, res, pole = level_solver(zl, start)
        total += it
        if np.any(pole):
            raise PoleError("pole in integrand")
    bad = ~(res <= cfg.tol)
    if np.any(bad):
        raise ConvergenceError(
            f"no convergence at {int(bad.sum())} of {zf.size} points",
            residual=float(np.nanmax(np.where(np.isfinite(res), res, np.inf))),
            iterations=int(total.max()),
        )
    if z.ndim == 0:
        return FixedPointResult(complex(f[0]), int(total[0]), float(res[0]))
    return FixedPointResult(f.reshape(shape), total.reshape(shape), res.reshape(shape))


def _as_evaluator(f0):
    if f0 is None or isinstance(f0, ComplexEvaluator):
        return f0
    if callable(f0):
        return ComplexEvaluator(func=f0)
    raise InputError("f0 must be callable")


def solve_mp(z, c, sigma, f0=None, cfg=DEFAULT_CONFIG, use_numba=None):
    """Solve ``f = f0(z - c int t sigma(dt) / (1 + t f))``.

    Parameters
    ----------
    z : complex or array_like
        Non-real spectral parameter(s).
    c : float
        Dimension ratio, ``c >= 0``.
    sigma : SpectralMeasure
        Population spectrum.
    f0 : ComplexEvaluator or callable, optional
        Unperturbed transform; defaults to ``-1/z``.
    cfg : SolverConfig

    Returns
    -------
    FixedPointResult

    Raises
    ------
    PoleError
        If ``|1 + t f| < 1e-12`` for some node ``t``.
    ConvergenceError
        If the residual does not reach ``cfg.tol``.
    """
    c = float(c)
    if not c >= 0:
        raise InputError("c must be nonnegative")
    t, p = _population_nodes(sigma)
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    f0 = _as_evaluator(f0)

    if f0 is None:
        def level(zl, start):
            return kernels.mp_fixed_point(zl, start, c, t, p, cfg.damping, cfg.tol, cfg.max_iter, use_numba)
    else:
        def rhs(f, zz, mask):
            d = 1.0 + t[None, :] * f[:, None]
            small = np.abs(d) < kernels.POLE_TOL
            d = np.where(small, kernels.POLE_TOL, d)
            zeta = zz - c * (p * t / d).sum(axis=1)
            s2 = (p * t * t / (d * d)).sum(axis=1)
            return f0(zeta), f0.deriv(zeta) * c * s2, small.any(axis=1)

        def level(zl, start):
            return kernels.hybrid_fixed_point(zl, rhs, start, cfg.damping, cfg.tol, cfg.max_iter)

    return _continuation(z, level, cfg)


def _default_f0(f0):
    f0 = _as_evaluator(f0)
    if f0 is None:
        return ComplexEvaluator(func=lambda z: -1.0 / z, derivative=lambda z: 1.0 / (z * z), label="atom at 0")
    return f0


def solve_deformed_semicircle(z, w, f0=None, cfg=DEFAULT_CONFIG):
    """Solve ``f = f0(z + 2 w^2 f)`` (free addition of a semicircle of scale ``w``)."""
    w = float(w)
    if not w >= 0:
        raise InputError("w must be nonnegative")
    f0 = _default_f0(f0)
    k = 2.0 * w * w

    def rhs(f, zz, mask):
        zeta = zz + k * f
        return f0(zeta), k * f0.deriv(zeta), np.zeros(f.shape, dtype=bool)

    def level(zl, start):
        return kernels.hybrid_fixed_point(zl, rhs, start, cfg.damping, cfg.tol, cfg.max_iter)

    return _continuation(z, level, cfg)


def solve_deformed_laguerre(z, a, f0=None, cfg=DEFAULT_CONFIG):
    """Solve ``f = f0(z - 2 a^2 / (1 + 2 a^2 f))``."""
    a = float(a)
    if not a >= 0:
        raise InputError("a must be nonnegative")
    f0 = _default_f0(f0)
    k = 2.0 * a * a

    def rhs(f, zz, mask):
        d = 1.0 + k * f
        small = np.abs(d) < kernels.POLE_TOL
        d = np.where(small, kernels.POLE_TOL, d)
        zeta = zz - k / d
        return f0(zeta), f0.deriv(zeta) * k * k / (d * d), small

    def level(zl, start):
        return kernels.hybrid_fixed_point(zl, rhs, start, cfg.damping, cfg.tol, cfg.max_iter)

    return _continuation(z, level, cfg)


def mp_evaluator(c, sigma, f0=None, cfg=DEFAULT_CONFIG):
    """:class:`ComplexEvaluator` for the Marchenko-Pastur transform."""
    return ComplexEvaluator(func=lambda z: solve_mp(z, c, sigma, f0, cfg).f, label="marchenko-pastur")


def deformed_semicircle_evaluator(w, f0=None, cfg=DEFAULT_CONFIG):
    return ComplexEvaluator(func=lambda z: solve_deformed_semicircle(z, w, f0, cfg).f, label="deformed semicircle")


def deformed_laguerre_evaluator(a, f0=None, cfg=DEFAULT_CONFIG):
    return ComplexEvaluator(func=lambda z: solve_deformed_laguerre(z, a, f0, cfg).f, label="deformed laguerre")
