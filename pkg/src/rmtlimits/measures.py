"""Spectral measures and their analytic transforms.

A spectral measure is a probability measure on the real line (eigenvalues)
or on the unit circle (eigenangles in ``[0, 2*pi)``). Four representations
are supported:

``Atoms``
    finitely many point masses, e.g. an empirical eigenvalue distribution;
``GridDensity``
    a nonnegative density sampled on a strictly increasing grid and
    interpolated linearly between nodes;
``Named``
    a closed-form law (``semicircle``, ``laguerre``, ``uniform_circle``);
``Mixture``
    a convex combination of the above, used when a limit law has an atom
    on top of a continuous part.

The Stieltjes transform is ``f(z) = int m(dl) / (l - z)`` for non-real ``z``;
the Herglotz transform of a circular measure is
``h(z) = int (e^{it} + z) / (e^{it} - z) m(dt)`` for ``|z| != 1``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, SpectralParameterError

TWO_PI = 2.0 * math.pi
MASS_TOL_ATOMS = 1e-9
MASS_TOL_GRID = 1e-6
NEGATIVE_TOL = 1e-6

__all__ = [
    "Atoms",
    "GridDensity",
    "Named",
    "Mixture",
    "ComplexEvaluator",
    "KolmogorovDistance",
    "NevanlinnaReport",
    "empirical_measure",
    "stieltjes_eval",
    "stieltjes_derivative",
    "herglotz_eval",
    "stieltjes_evaluator",
    "invert_stieltjes",
    "nevanlinna_check",
    "ks_distance",
    "cdf",
]


# ---------------------------------------------------------------------------
# measure representations
# ---------------------------------------------------------------------------

def _check_domain(domain):
    if domain not in ("real", "circle"):
        raise InputError(f"unknown domain {domain!r}; expected 'real' or 'circle'")


@dataclass(frozen=True, eq=False)
class Atoms:
    """Point masses ``sum_k weights[k] * delta(locations[k])``."""

    locations: np.ndarray
    weights: np.ndarray
    domain: str = "real"

    def __post_init__(self):
        _check_domain(self.domain)
        loc = np.asarray(self.locations, dtype=float).ravel()
        wts = np.asarray(self.weights, dtype=float).ravel()
        if loc.size == 0:
            raise InputError("empty spectrum")
        if loc.shape != wts.shape:
            raise InputError("atom locations and weights differ in length")
        if not np.all(np.isfinite(loc)) or not np.all(np.isfinite(wts)):
            raise InputError("atom locations and weights must be finite")
        if np.any(wts < 0):
            raise InputError(f"negative atom weight at index {int(np.argmax(wts < 0))}")
        if abs(math.fsum(wts) - 1.0) > MASS_TOL_ATOMS:
            raise InputError(f"atom weights sum to {math.fsum(wts)!r}, expected 1")
        order = np.argsort(loc, kind="stable")
        object.__setattr__(self, "locations", loc[order])
        object.__setattr__(self, "weights", wts[order])

    @property
    def size(self):
        return self.locations.size

    def mass(self, lo, hi):
        """Mass of the closed interval ``[lo, hi]``."""
        sel = (self.locations >= lo) & (self.locations <= hi)
        return math.fsum(self.weights[sel])


def _trapezoid_weights(grid, periodic=False):
    h = np.diff(grid)
    w = np.zeros_like(grid)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    if periodic:
        gap = grid[0] + TWO_PI - grid[-1]
        w[0] += 0.5 * gap
        w[-1] += 0.5 * gap
    return w


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density values on a grid, linear between nodes and zero outside.

    For ``domain="circle"`` the grid holds angles in ``[0, 2*pi)`` and the
    density is treated as periodic.

    ``info`` carries provenance such as the inversion ``epsilon``, the raw
    mass before renormalization and whether negative values were clamped.
    """

    grid: np.ndarray
    values: np.ndarray
    domain: str = "real"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_domain(self.domain)
        g = np.asarray(self.grid, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if g.size < 2 or g.shape != v.shape:
            raise InputError("grid and values must have equal length >= 2")
        if not np.all(np.isfinite(g)) or not np.all(np.isfinite(v)):
            raise InputError("grid and values must be finite")
        if np.any(np.diff(g) <= 0):
            raise InputError(f"grid not strictly increasing at index {int(np.argmax(np.diff(g) <= 0)) + 1}")
        if np.any(v < 0):
            raise InputError(f"negative density value at index {int(np.argmax(v < 0))}")
        if self.domain == "circle" and (g[0] < 0 or g[-1] >= TWO_PI):
            raise InputError("circular grid must lie in [0, 2*pi)")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        total = self.total_mass()
        if abs(total - 1.0) > MASS_TOL_GRID:
            raise InputError(f"density integrates to {total!r}, expected 1")

    def quadrature_weights(self):
        """Trapezoid weights on the grid (periodic for circular densities)."""
        return _trapezoid_weights(self.grid, periodic=self.domain == "circle")

    def total_mass(self):
        return float(np.dot(self.quadrature_weights(), self.values))

    @classmethod
    def normalized(cls, grid, values, domain="real", info=None):
        """Build a density from unnormalized nonnegative values."""
        g = np.asarray(grid, dtype=float)
        v = np.asarray(values, dtype=float)
        mass = float(np.dot(_trapezoid_weights(g, periodic=domain == "circle"), v))
        if not mass > 0:
            raise InputError("density has zero mass on the grid")
        return cls(g, v / mass, domain, dict(info or {}, raw_mass=mass))


@dataclass(frozen=True, eq=False)
class Named:
    """A closed-form law identified by name and parameters."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        from . import limit_laws

        limit_laws.named_law(self.name, self.params)

    @property
    def domain(self):
        return "circle" if self.name == "uniform_circle" else "real"

    @property
    def law(self):
        from . import limit_laws

        return limit_laws.named_law(self.name, self.params)


@dataclass(frozen=True, eq=False)
class Mixture:
    """Convex combination ``sum_k weight_k * measure_k``."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), m) for w, m in self.components)
        if not comps:
            raise InputError("mixture needs at least one component")
        if any(w < 0 for w, _ in comps):
            raise InputError("negative mixture weight")
        if abs(math.fsum(w for w, _ in comps) - 1.0) > MASS_TOL_ATOMS:
            raise InputError("mixture weights must sum to 1")
        domains = {m.domain for _, m in comps}
        if len(domains) != 1:
            raise InputError("mixture components live on different domains")
        object.__setattr__(self, "components", comps)

    @property
    def domain(self):
        return self.components[0][1].domain


SpectralMeasure = Atoms | GridDensity | Named | Mixture


def empirical_measure(eigenvalues, domain="real"):
    """Normalized counting measure: weight ``1/n`` at every eigenvalue.

    Coincident eigenvalues are kept as separate atoms at the same location.
    """
    x = np.asarray(eigenvalues, dtype=float).ravel()
    if x.size == 0:
        raise InputError("empty spectrum")
    if not np.all(np.isfinite(x)):
        raise InputError("eigenvalues must be finite")
    return Atoms(x, np.full(x.size, 1.0 / x.size), domain)


# ---------------------------------------------------------------------------
# analytic transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexEvaluator:
    """Vectorized analytic function of a spectral parameter.

    ``func`` maps a complex ndarray to a complex ndarray of equal shape.
    ``derivative`` is optional; :meth:`deriv` falls back to a central
    difference scaled to the distance from the forbidden set.

    ``min_abs_imag`` (real-line transforms) or ``annulus`` (circular
    transforms, ``(r_in, r_out)`` excluded) declare the validity region.
    """

    func: Callable
    derivative: Callable | None = None
    min_abs_imag: float = 0.0
    domain: str = "real"
    annulus: tuple | None = None
    label: str = ""

    def _check(self, z):
        if self.domain == "real":
            y = np.abs(np.imag(z))
            if np.any(y == 0):
                raise SpectralParameterError("real spectral parameter")
        else:
            if np.any(np.abs(np.abs(z) - 1.0) <= 1e-12):
                raise SpectralParameterError("spectral parameter on unit circle")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        self._check(z)
        out = np.asarray(self.func(z), dtype=complex)
        return out[()] if out.ndim == 0 else out

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        self._check(z)
        if self.derivative is not None:
            out = np.asarray(self.derivative(z), dtype=complex)
        else:
            if self.domain == "real":
                dist = np.abs(np.imag(z))
            else:
                dist = np.abs(np.abs(z) - 1.0)
            h = np.minimum(1e-3 * dist, 1e-3)
            out = np.asarray((self.func(z + h) - self.func(z - h)) / (2.0 * h), dtype=complex)
        return out[()] if out.ndim == 0 else out


def _atom_sum(loc, wts, z, kernel):
    zf = z.ravel()
    out = np.empty(zf.shape, dtype=complex)
    chunk = max(1, 2_000_000 // loc.size)
    for start in range(0, zf.size, chunk):
        out[start:start + chunk] = kernel(loc[None, :] - zf[start:start + chunk, None]) @ wts
    return out.reshape(z.shape)


_PHI_TERMS = np.arange(2, 20)


def _phi(x):
    """``x - log1p(x)`` without cancellation for small ``|x|``."""
    out = x - np.log1p(x)
    small = np.abs(x) < 0.1
    if small.any():
        xs = x[small][..., None]
        out[small] = ((-1.0) ** _PHI_TERMS * xs ** _PHI_TERMS / _PHI_TERMS).sum(axis=-1)
    return out


def _grid_stieltjes(m: GridDensity, z, derivative=False):
    # Exact transform of the piecewise-linear interpolant. On a segment
    # [g0, g0 + h] with value v0 and slope s, and u = g0 - z, x = h/u:
    #   integral = v0 log1p(x) + s u phi(x),  phi(x) = x - log1p(x)
    #   d/dz     = v0 x/(u + h) + s (log1p(x) - x/(1 + x))
    g, v = m.grid, m.values
    zf = z.ravel()
    h = np.diff(g)
    s = np.diff(v) / h
    v0 = v[:-1]
    out = np.empty(zf.shape, dtype=complex)
    # chunk to bound memory: (len(z), len(grid)) complex temporaries
    chunk = max(1, 500_000 // g.size)
    for start in range(0, zf.size, chunk):
        zz = zf[start:start + chunk]
        u = g[None, :-1] - zz[:, None]
        x = h[None, :] / u
        phi = _phi(x)
        if not derivative:
            out[start:start + chunk] = (v0 * (x - phi) + s * u * phi).sum(axis=1)
        else:
            # log1p(x) - x/(1+x) = x^2/(1+x) - phi(x)
            psi = x * x / (1.0 + x) - phi
            out[start:start + chunk] = (v0 * x / (u + h) + s * psi).sum(axis=1)
    return out.reshape(z.shape)


def _circle_nodes(m):
    if isinstance(m, Atoms):
        return m.locations, m.weights
    if isinstance(m, GridDensity):
        return m.grid, m.values * m.quadrature_weights()
    raise InputError(f"no circular quadrature for {type(m).__name__}")


def stieltjes_eval(m, z):
    """Stieltjes transform ``int m(dl)/(l - z)`` of a real-line measure.

    Atoms are summed exactly; grid densities are integrated exactly for
    their piecewise-linear interpolant.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.imag(z) == 0):
        raise SpectralParameterError("real spectral parameter")
    if m.domain != "real":
        raise InputError("Stieltjes transform needs a real-line measure")
    if isinstance(m, Atoms):
        out = _atom_sum(m.locations, m.weights, z, lambda d: 1.0 / d)
    elif isinstance(m, GridDensity):
        out = _grid_stieltjes(m, z)
    elif isinstance(m, Named):
        out = np.asarray(m.law.stieltjes(z), dtype=complex)
    elif isinstance(m, Mixture):
        out = sum(w * np.asarray(stieltjes_eval(c, z)) for w, c in m.components)
    else:
        raise InputError(f"not a spectral measure: {m!r}")
    return out[()] if np.ndim(out) == 0 else out


def stieltjes_derivative(m, z):
    """Derivative ``int m(dl)/(l - z)^2`` of the Stieltjes transform."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.imag(z) == 0):
        raise SpectralParameterError("real spectral parameter")
    if isinstance(m, Atoms):
        out = _atom_sum(m.locations, m.weights, z, lambda d: 1.0 / (d * d))
    elif isinstance(m, GridDensity):
        out = _grid_stieltjes(m, z, derivative=True)
    elif isinstance(m, Named):
        out = np.asarray(m.law.stieltjes_derivative(z), dtype=complex)
    elif isinstance(m, Mixture):
        out = sum(w * np.asarray(stieltjes_derivative(c, z)) for w, c in m.components)
    else:
        raise InputError(f"not a spectral measure: {m!r}")
    return out[()] if np.ndim(out) == 0 else out


def stieltjes_evaluator(m, label=""):
    """Wrap the Stieltjes transform of ``m`` as a :class:`ComplexEvaluator`."""
    if m.domain != "real":
        raise InputError("Stieltjes transform needs a real-line measure")
    return ComplexEvaluator(
        func=lambda z: stieltjes_eval(m, z),
        derivative=lambda z: stieltjes_derivative(m, z),
        label=label or type(m).__name__,
    )


def herglotz_eval(m, z):
    """Herglotz transform of a circular measure.

    Equals 1 at ``z = 0`` for every probability measure.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(np.abs(z) - 1.0) <= 1e-12):
        raise SpectralParameterError("spectral parameter on unit circle")
    if m.domain != "circle":
        raise InputError("Herglotz transform needs a circular measure")
    if isinstance(m, Named):
        out = np.asarray(m.law.herglotz(z), dtype=complex)
    elif isinstance(m, Mixture):
        out = sum(w * np.asarray(herglotz_eval(c, z)) for w, c in m.components)
    else:
        theta, wts = _circle_nodes(m)
        e = np.exp(1j * theta)
        zf = z.ravel()
        out = np.empty(zf.shape, dtype=complex)
        chunk = max(1, 2_000_000 // e.size)
        for start in range(0, zf.size, chunk):
            zz = zf[start:start + chunk, None]
            out[start:start + chunk] = ((e + zz) / (e - zz)) @ wts
        out = out.reshape(z.shape)
    return out[()] if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# inversion and validity checks
# ---------------------------------------------------------------------------

def invert_stieltjes(f, grid, epsilon=1e-4, atoms=None, normalize=True):
    """Recover a density from a Stieltjes transform.

    Evaluates ``(1/pi) Im f(l + i*epsilon)`` on ``grid``, clamps negative
    values to zero and renormalizes to unit mass.

    Parameters
    ----------
    f : callable
        Vectorized Stieltjes transform (e.g. a :class:`ComplexEvaluator`).
    grid : array_like
        Strictly increasing evaluation points.
    epsilon : float
        Distance from the real axis.
    atoms : sequence of (location, mass), optional
        Known point masses. Their exact transform is subtracted before
        inversion and they are returned as ``Atoms`` inside a ``Mixture``.
    normalize : bool
        If False the raw values are kept (mass is then only approximately 1
        and the result is returned as a plain ndarray).

    Returns
    -------
    GridDensity or Mixture or ndarray
        ``info`` records ``epsilon``, ``raw_mass`` and ``negative_flag``
        (True when some ``Im f`` fell below ``-1e-6`` before clamping).
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    g = np.asarray(grid, dtype=float)
    z = g + 1j * epsilon
    vals = np.asarray(f(z), dtype=complex)
    atoms = list(atoms or [])
    atom_mass = math.fsum(w for _, w in atoms)
    for loc, w in atoms:
        vals = vals - w / (loc - z)
    dens = vals.imag / math.pi
    negative = bool(np.any(dens < -NEGATIVE_TOL))
    if negative:
        warnings.warn("negative Im f beyond tolerance before clamping", RuntimeWarning, stacklevel=2)
    dens = np.maximum(dens, 0.0)
    if not normalize:
        return dens
    info = {"epsilon": float(epsilon), "negative_flag": negative}
    continuous = GridDensity.normalized(g, dens, info=info)
    if not atoms:
        return continuous
    if not 0 <= atom_mass < 1:
        raise InputError("atom masses must sum to less than 1")
    comps = [(w, Atoms([loc], [1.0])) for loc, w in atoms] + [(1.0 - atom_mass, continuous)]
    return Mixture(tuple(comps))


@dataclass
class NevanlinnaReport:
    ok: bool
    violations: list
    normalization: dict

    def __bool__(self):
        return self.ok


def nevanlinna_check(f, sample_points, y_probe=(1.0, 10.0, 100.0, 1000.0), rel_tol=0.1):
    """Check that ``f`` behaves like the Stieltjes transform of a probability measure.

    Tests ``Im f(z) * Im z > 0`` at every sample point and that
    ``y |f(iy)|`` is within ``rel_tol`` of 1 at the largest probe ``y``.
    """
    pts = np.asarray(sample_points, dtype=complex).ravel()
    vals = np.atleast_1d(np.asarray(f(pts), dtype=complex))
    prod = vals.imag * pts.imag
    violations = [complex(p) for p, ok in zip(pts, prod > 0) if not ok]
    ys = np.asarray(y_probe, dtype=float)
    tails = ys * np.abs(np.atleast_1d(np.asarray(f(1j * ys), dtype=complex)))
    norm_ok = abs(tails[-1] - 1.0) <= rel_tol
    normalization = {"y": ys.tolist(), "y_abs_f": tails.tolist(), "ok": bool(norm_ok)}
    return NevanlinnaReport(ok=not violations and bool(norm_ok), violations=violations, normalization=normalization)


# ---------------------------------------------------------------------------
# distribution functions and distances
# ---------------------------------------------------------------------------

def _grid_cdf(m: GridDensity, x):
    g, v = m.grid, m.values
    h = np.diff(g)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (v[:-1] + v[1:]))])
    total = cum[-1]
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(g, x, side="right") - 1, 0, g.size - 2)
    dx = np.clip(x - g[idx], 0.0, h[idx])
    slope = (v[idx + 1] - v[idx]) / h[idx]
    val = cum[idx] + v[idx] * dx + 0.5 * slope * dx * dx
    val = np.where(x < g[0], 0.0, np.where(x >= g[-1], total, val))
    return val / total


def _cdf_lr(m, x):
    """Left limit and value of the CDF at ``x``."""
    x = np.asarray(x, dtype=float)
    if isinstance(m, Atoms):
        cw = np.concatenate([[0.0], np.cumsum(m.weights)])
        cw /= cw[-1]
        left = cw[np.searchsorted(m.locations, x, side="left")]
        right = cw[np.searchsorted(m.locations, x, side="right")]
        return left, right
    if isinstance(m, GridDensity):
        val = _grid_cdf(m, x)
        return val, val
    if isinstance(m, Named):
        val = np.asarray(m.law.cdf(x), dtype=float)
        return val, val
    if isinstance(m, Mixture):
        left = np.zeros_like(x)
        right = np.zeros_like(x)
        for w, c in m.components:
            lo, hi = _cdf_lr(c, x)
            left = left + w * lo
            right = right + w * hi
        return left, right
    raise InputError(f"not a spectral measure: {m!r}")


def cdf(m, x):
    """Right-continuous distribution function of ``m`` at ``x``.

    Circular measures use the angle ``0`` as origin.
    """
    return _cdf_lr(m, x)[1]


def _breakpoints(m):
    if isinstance(m, Atoms):
        return m.locations
    if isinstance(m, GridDensity):
        return m.grid
    if isinstance(m, Named):
        return m.law.evaluation_grid()
    if isinstance(m, Mixture):
        return np.concatenate([_breakpoints(c) for _, c in m.components])
    raise InputError(f"not a spectral measure: {m!r}")


@dataclass(frozen=True)
class KolmogorovDistance:
    value: float

    def __float__(self):
        return self.value


def ks_distance(m1, m2):
    """Kolmogorov-Smirnov distance ``sup |F1 - F2|``.

    The supremum is taken over the merged breakpoints of both measures,
    using both one-sided limits at atoms, so it is exact for atomic
    measures.
    """
    if m1.domain != m2.domain:
        raise InputError("cannot compare circular and real-line measures")
    pts = np.unique(np.concatenate([_breakpoints(m1), _breakpoints(m2)]))
    l1, r1 = _cdf_lr(m1, pts)
    l2, r2 = _cdf_lr(m2, pts)
    d = max(float(np.max(np.abs(l1 - l2))), float(np.max(np.abs(r1 - r2))))
    return KolmogorovDistance(min(1.0, d))
