"""Equilibrium measures of convex polynomial potentials.

For a convex even-degree polynomial ``V`` the equilibrium measure is
supported on one interval ``[a, b]`` and has density

    rho(l) = P(l) sqrt((b - l)(l - a)),
    P(l)   = 1/(2 pi^2) int_a^b (V'(l) - V'(m)) / (l - m) dm / sqrt((b - m)(m - a)).

The endpoints solve

    int_a^b m^q V'(m) / sqrt((b - m)(m - a)) dm = 2 pi [q == 1],   q = 0, 1.

All integrals against the arcsine weight are evaluated by Gauss-Chebyshev
quadrature, which is exact for the polynomial integrands involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate, special

from .config import DEFAULT_CONFIG
from .errors import ConvergenceError, InputError
from .measures import GridDensity

__all__ = [
    "PotentialPolynomial",
    "SupportInterval",
    "MonomialLaw",
    "SingularEquationReport",
    "singular_quadrature",
    "solve_support",
    "equilibrium_density",
    "equilibrium_polynomial",
    "equilibrium_mass",
    "equilibrium_measure",
    "monomial_integral",
    "monomial_support",
    "monomial_density",
    "verify_singular_equation",
]

RESIDUAL_TOL = 1e-10
CONVEXITY_POINTS = 1000


@dataclass(frozen=True, eq=False)
class PotentialPolynomial:
    """Convex polynomial potential ``V(l) = sum_k coeffs[k] l^k``.

    Raises :class:`InputError` unless the degree is even and at least 2,
    the leading coefficient is positive and ``V'' >= 0`` on a grid of
    ``CONVEXITY_POINTS`` points covering the endpoint search box.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.trim_zeros(np.asarray(self.coeffs, dtype=float).ravel(), "b")
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise InputError("potential needs finite coefficients")
        deg = c.size - 1
        if deg < 2 or deg % 2:
            raise InputError(
                f"potential must be a convex polynomial of an even degree; got degree {deg}"
            )
        if c[-1] <= 0:
            raise InputError(
                "potential must be a convex polynomial of an even degree with positive leading coefficient"
            )
        object.__setattr__(self, "coeffs", c)
        box = self.search_box()
        x = np.linspace(-box, box, CONVEXITY_POINTS)
        vpp = self.second(x)
        scale = max(1.0, float(np.max(np.abs(vpp))))
        if np.any(vpp < -1e-12 * scale):
            raise InputError("potential is not convex on the endpoint search box")

    @property
    def degree(self):
        return self.coeffs.size - 1

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)

    def deriv(self, x):
        return npoly.polyval(x, self.deriv_coeffs)

    def second(self, x):
        return npoly.polyval(x, npoly.polyder(self.coeffs, 2))

    @property
    def deriv_coeffs(self):
        return npoly.polyder(self.coeffs)

    def search_box(self):
        """Half-width of a symmetric box containing the support."""
        guess = _leading_radius(self)
        # Cauchy bound on the roots of V' plus the leading-term radius
        d = self.deriv_coeffs
        cauchy = 1.0 + float(np.max(np.abs(d[:-1] / d[-1]))) if d.size > 1 else 1.0
        return 2.0 * guess + cauchy

    def to_dict(self):
        return {"coeffs": [float(v) for v in self.coeffs]}


@dataclass(frozen=True)
class SupportInterval:
    """Support ``[a, b]`` with the residuals of both endpoint conditions."""

    a: float
    b: float
    residuals: tuple = (0.0, 0.0)
    iterations: int = 0

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not self.a < self.b:
            raise InputError("support interval needs a < b")

    @property
    def center(self):
        return 0.5 * (self.a + self.b)

    @property
    def radius(self):
        return 0.5 * (self.b - self.a)


def monomial_integral(alpha):
    """``I_alpha = int_0^1 t^alpha / sqrt(1 - t^2) dt``."""
    alpha = float(alpha)
    return 0.5 * special.beta(0.5 * (alpha + 1.0), 0.5)


@dataclass(frozen=True)
class MonomialLaw:
    """Equilibrium law of ``V = |l|^alpha / alpha``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha >= 2:
            raise InputError("monomial exponent must satisfy alpha >= 2")

    @property
    def integral(self):
        return monomial_integral(self.alpha)

    @property
    def endpoint(self):
        return (math.pi / self.integral) ** (1.0 / self.alpha)

    def density(self, lam):
        return monomial_density(self.alpha, lam)


def _node_count(degree):
    return 64 + 8 * int(degree)


def _chebyshev_nodes(center, radius, k):
    theta = (2.0 * np.arange(1, k + 1) - 1.0) * math.pi / (2.0 * k)
    return center + radius * np.cos(theta), np.cos(theta)


def singular_quadrature(g, a, b, node_count=64):
    """``int_a^b g(m) / sqrt((b - m)(m - a)) dm`` by Gauss-Chebyshev quadrature.

    Parameters
    ----------
    g : callable or array_like
        Vectorized function, or polynomial coefficients in ascending order.
    a, b : float
        Interval endpoints, ``a < b``.
    node_count : int
        Number of nodes ``K``; exact for polynomials of degree ``< 2K``.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise InputError("singular quadrature needs a < b")
    mu, _ = _chebyshev_nodes(0.5 * (a + b), 0.5 * (b - a), int(node_count))
    vals = g(mu) if callable(g) else npoly.polyval(mu, np.asarray(g, dtype=float))
    return math.pi / node_count * math.fsum(np.asarray(vals, dtype=float))


def _leading_radius(v):
    alpha = v.degree
    kappa = alpha * v.coeffs[-1]
    return (math.pi / (kappa * monomial_integral(alpha))) ** (1.0 / alpha)


def _conditions(v, c, r, k):
    """Endpoint conditions and their Jacobian in the (center, radius) variables."""
    mu, cos = _chebyshev_nodes(c, r, k)
    d1 = v.deriv_coeffs
    w = math.pi / k
    g0 = npoly.polyval(mu, d1)
    g1 = mu * g0
    dg0 = npoly.polyval(mu, npoly.polyder(d1))
    dg1 = g0 + mu * dg0
    f = np.array([w * g0.sum(), w * g1.sum() - 2.0 * math.pi])
    jac = np.array([
        [w * dg0.sum(), w * (cos * dg0).sum()],
        [w * dg1.sum(), w * (cos * dg1).sum()],
    ])
    return f, jac


def solve_support(v, cfg=DEFAULT_CONFIG):
    """Solve the endpoint conditions by damped Newton on ``(a, b)``.

    Starts from the symmetric interval of the leading monomial and restarts
    from rescaled radii if Newton fails.
    """
    k = _node_count(v.degree)
    r0 = _leading_radius(v)
    last = None
    total = 0
    for scale in (1.0, 2.0, 0.5, 4.0, 0.25):
        c, r = 0.0, r0 * scale
        f, jac = _conditions(v, c, r, k)
        norm = float(np.max(np.abs(f)))
        for it in range(cfg.max_iter):
            if norm <= 1e-13:
                break
            try:
                step = np.linalg.solve(jac, -f)
            except np.linalg.LinAlgError:
                break
            t = 1.0
            while t > 1e-10:
                cn, rn = c + t * step[0], r + t * step[1]
                if rn > 0:
                    fn, jn = _conditions(v, cn, rn, k)
                    nn = float(np.max(np.abs(fn)))
                    if nn < norm:
                        break
                t *= 0.5
            else:
                break
            c, r, f, jac, norm = cn, rn, fn, jn, nn
            total += 1
        last = (c - r, c + r, norm)
        if norm <= RESIDUAL_TOL:
            return SupportInterval(c - r, c + r, tuple(float(x) for x in np.abs(f)), total)
    raise ConvergenceError(
        f"endpoint Newton failed; last iterate a={last[0]!r}, b={last[1]!r}",
        residual=last[2],
        iterations=total,
    )


def equilibrium_polynomial(v, support):
    """Coefficients (ascending) of ``P`` in ``rho = P sqrt((b - l)(l - a))``."""
    d = v.deriv_coeffs
    k = _node_count(v.degree)
    moments = np.array([
        singular_quadrature(lambda m, i=i: m ** i, support.a, support.b, k) for i in range(d.size)
    ])
    p = np.zeros(max(d.size - 1, 1))
    for j in range(d.size - 1):
        p[j] = math.fsum(d[kk] * moments[kk - 1 - j] for kk in range(j + 1, d.size))
    return p / (2.0 * math.pi ** 2)


def equilibrium_density(v, support, lam):
    """Equilibrium density at ``lam``; zero outside ``[a, b]``."""
    lam = np.asarray(lam, dtype=float)
    p = equilibrium_polynomial(v, support)
    root = np.sqrt(np.clip((support.b - lam) * (lam - support.a), 0.0, None))
    out = npoly.polyval(lam, p) * root
    return out[()] if out.ndim == 0 else out


def equilibrium_mass(v, support, node_count=256):
    """Total mass, integrated exactly with the ``sqrt`` weight (Chebyshev second kind)."""
    p = equilibrium_polynomial(v, support)
    k = int(node_count)
    theta = np.arange(1, k + 1) * math.pi / (k + 1)
    lam = support.center + support.radius * np.cos(theta)
    wts = math.pi / (k + 1) * np.sin(theta) ** 2 * support.radius ** 2
    return math.fsum(wts * npoly.polyval(lam, p))


def equilibrium_measure(v, support=None, points=4001):
    """Equilibrium law as a :class:`GridDensity` on a cosine-spaced grid."""
    support = support or solve_support(v)
    grid = support.center - support.radius * np.cos(np.linspace(0.0, math.pi, points))
    vals = equilibrium_density(v, support, grid)
    return GridDensity.normalized(grid, vals, info={"a": support.a, "b": support.b})


def monomial_support(alpha):
    """Endpoint ``a = (pi / I_alpha)^(1/alpha)`` of the law of ``|l|^alpha / alpha``."""
    return MonomialLaw(alpha).endpoint


def monomial_density(alpha, lam):
    """Density of the equilibrium law of ``|l|^alpha / alpha``.

    ``rho(l) = 1/(2 pi I_{alpha-1}) int_{|l|}^a t^(alpha-1) / sqrt(t^2 - l^2) dt``,
    evaluated after ``t = sqrt(u^2 + l^2)``, which removes the endpoint
    singularity.
    """
    law = MonomialLaw(alpha)
    a = law.endpoint
    pref = 1.0 / (2.0 * math.pi * monomial_integral(alpha - 1.0))

    def one(x):
        x = abs(float(x))
        if x >= a:
            return 0.0
        top = math.sqrt(a * a - x * x)
        val, _ = integrate.quad(lambda u: (u * u + x * x) ** (0.5 * (alpha - 2.0)), 0.0, top,
                                epsabs=1e-14, epsrel=1e-13)
        return pref * val

    lam = np.asarray(lam, dtype=float)
    out = np.vectorize(one, otypes=[float])(lam)
    return out[()] if out.ndim == 0 else out


def _scalar_density(v, support):
    """Pure-Python closure of the equilibrium density, for adaptive quadrature."""
    coeffs = [float(c) for c in equilibrium_polynomial(v, support)[::-1]]
    a, b = support.a, support.b

    def rho(m):
        if not a < m < b:
            return 0.0
        p = 0.0
        for c in coeffs:
            p = p * m + c
        return p * math.sqrt((b - m) * (m - a))

    return rho


@dataclass
class SingularEquationReport:
    max_deviation: float
    points: np.ndarray
    deviations: np.ndarray


def verify_singular_equation(v, support, points=None, density=None):
    """Check ``p.v. int rho(m) / (m - l) dm = -V'(l) / 2`` at interior points.

    Parameters
    ----------
    points : array_like, optional
        Interior test points; defaults to 50 points strictly inside ``(a, b)``.
    density : callable, optional
        Density to test; defaults to the equilibrium density of ``v``.
    """
    if points is None:
        t = np.linspace(0.0, 1.0, 52)[1:-1]
        points = support.a + (support.b - support.a) * t
    points = np.asarray(points, dtype=float)
    if np.any((points <= support.a) | (points >= support.b)):
        raise InputError("test points must lie strictly inside the support")
    rho = density or _scalar_density(v, support)
    dev = np.empty(points.size)
    for i, lam in enumerate(points):
        pv, _ = integrate.quad(rho, support.a, support.b, weight="cauchy", wvar=lam,
                               epsabs=1e-13, epsrel=1e-12, limit=400)
        dev[i] = abs(pv + 0.5 * v.deriv(lam))
    return SingularEquationReport(float(dev.max()), points, dev)
