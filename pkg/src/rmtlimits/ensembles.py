"""Seeded samplers for the random-matrix ensembles and related utilities.

Every sampler is a pure function of its parameters and an integer seed.
Independent trials use child streams derived from ``(seed, trial, tag)``
(see :func:`child_rng`), so trials can run in any order or in parallel.

Normalizations (``M = W / sqrt(n)``):

* GUE: off-diagonal ``E|W_jk|^2 = 2 w^2``, ``E W_jk^2 = 0``; real diagonal of
  variance ``2 w^2``. Spectrum tends to the semicircle of radius ``2 sqrt(2) w``.
* GOE: off-diagonal variance ``w^2``, diagonal ``2 w^2``; radius ``2 w``.
* Wigner, ``"hermitian"``: ``W_jk = sqrt(2) w xi`` for all entries, with
  ``xi`` a standardized draw of the entry law (GUE-like scale).
* Wigner, ``"real-symmetric-doubled-diagonal"``: ``W_jk = w xi`` off the
  diagonal and ``sqrt(2) w xi`` on it (GOE-like scale).
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field, fields

import numpy as np

from . import kernels
from .equilibrium import PotentialPolynomial
from .errors import InputError, PoleError, SpectralParameterError

__all__ = [
    "ENTRY_LAWS",
    "FAMILIES",
    "NORMALIZATIONS",
    "EnsembleSpec",
    "HermitianSample",
    "MCMCParams",
    "LogGasChain",
    "child_rng",
    "draw_entries",
    "entry_excess",
    "sample_gue",
    "sample_goe",
    "sample_wigner",
    "sample_laguerre",
    "sample_cov",
    "sample_haar_unitary",
    "sample_cue_angles",
    "sample_free_sum",
    "sample_deformed",
    "sample_invariant",
    "run_loggas_chain",
    "sample",
    "sample_spectrum",
    "eigenvalues",
    "rank_one_update",
]

ENTRY_LAWS = ("complex-gaussian", "real-gaussian", "rademacher", "uniform", "cauchy")
NORMALIZATIONS = ("hermitian", "real-symmetric-doubled-diagonal")
FAMILIES = (
    "GUE", "GOE", "WignerGeneral", "Laguerre", "SampleCovariance",
    "HaarUnitary", "FreeSum", "Deformed", "InvariantLogGas",
)
SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------

def child_rng(seed, trial=0, tag=""):
    """Generator for stream ``(seed, trial, tag)``; independent of call order."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or int(seed) < 0:
        raise InputError("seed must be a nonnegative integer")
    key = [int(seed), int(trial), zlib.crc32(str(tag).encode())]
    return np.random.default_rng(np.random.SeedSequence(key))


def _check_law(law):
    if law not in ENTRY_LAWS:
        raise InputError(f"unknown entry law {law!r}; expected one of {ENTRY_LAWS}")
    return law


def draw_entries(law, rng, shape):
    """Standardized draws: mean 0 and ``E|xi|^2 = 1`` (except ``cauchy``)."""
    _check_law(law)
    if law == "complex-gaussian":
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / SQRT2
    if law == "real-gaussian":
        return rng.standard_normal(shape)
    if law == "rademacher":
        return rng.integers(0, 2, size=shape) * 2.0 - 1.0
    if law == "uniform":
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=shape)
    return rng.standard_cauchy(shape)


_FOURTH = {"real-gaussian": 3.0, "rademacher": 1.0, "uniform": 9.0 / 5.0}


def entry_excess(law):
    """Fourth cumulant ``E xi^4 - 3`` of a standardized real entry law."""
    _check_law(law)
    if law not in _FOURTH:
        raise InputError(f"excess is defined for real laws with finite moments, not {law!r}")
    return _FOURTH[law] - 3.0


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HermitianSample:
    """A sampled Hermitian (or real symmetric) matrix and its provenance."""

    matrix: np.ndarray
    seed: object = None
    family: str = ""

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def is_real(self):
        return not np.iscomplexobj(self.matrix)


@dataclass(frozen=True)
class MCMCParams:
    """Log-gas Metropolis settings.

    ``steps`` snapshots are recorded every ``thin`` sweeps after ``burn_in``
    sweeps; ``step_scale`` defaults to ``0.1 / sqrt(n)``.
    """

    steps: int = 1
    burn_in: int = 100_000
    thin: int = 10
    step_scale: float | None = None

    def __post_init__(self):
        if self.steps < 1 or self.burn_in < 0 or self.thin < 1:
            raise InputError("MCMC needs steps >= 1, burn_in >= 0, thin >= 1")
        if self.step_scale is not None and not self.step_scale > 0:
            raise InputError("step_scale must be positive")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class EnsembleSpec:
    """Family and parameters of a random-matrix ensemble.

    Only the fields relevant to ``family`` are used; see :func:`sample`.
    ``base`` (Deformed) is a list of diagonal values or another spec;
    ``noise`` is a spec.
    """

    family: str
    n: int
    w: float | None = None
    a: float | None = None
    m: int | None = None
    t_values: tuple | None = None
    law: str | None = None
    normalization: str = "hermitian"
    diag_a: tuple | None = None
    diag_b: tuple | None = None
    base: object = None
    noise: object = None
    potential: tuple | None = None
    mcmc: MCMCParams = field(default_factory=MCMCParams)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InputError("n must be a positive integer")
        fam = self.family
        if fam in ("GUE", "GOE", "WignerGeneral"):
            _nonneg_scale("w", self.w)
        if fam == "WignerGeneral":
            _check_law(self.law)
            if self.normalization not in NORMALIZATIONS:
                raise InputError(f"unknown normalization {self.normalization!r}")
        if fam == "Laguerre":
            _nonneg_scale("a", self.a)
        if fam == "SampleCovariance":
            if self.m is None or self.m < 1:
                raise InputError("SampleCovariance requires m >= 1")
            t = np.asarray(self.t_values if self.t_values is not None else [], dtype=float)
            if t.size != self.m or not np.all(np.isfinite(t)):
                raise InputError("SampleCovariance requires m finite population values")
            _check_law(self.law or "complex-gaussian")
        if fam == "FreeSum":
            if self.diag_a is None or self.diag_b is None:
                raise InputError("FreeSum requires diag_a and diag_b")
            if len(self.diag_a) != self.n or len(self.diag_b) != self.n:
                raise InputError("FreeSum diagonals must have length n")
        if fam == "Deformed":
            if self.base is None or not isinstance(self.noise, EnsembleSpec):
                raise InputError("Deformed requires base and a noise spec")
            if self.noise.n != self.n:
                raise InputError("noise dimension differs from n")
        if fam == "InvariantLogGas":
            if self.potential is None:
                raise InputError("InvariantLogGas requires potential coefficients")
            PotentialPolynomial(self.potential)


def _nonneg_scale(name, value):
    # zero scale is accepted: it gives the zero matrix (noise switched off)
    if value is None or not float(value) >= 0 or not math.isfinite(float(value)):
        raise InputError(f"{name} must be a nonnegative finite number")
    return float(value)


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InputError("n must be a positive integer")
    return int(n)


# ---------------------------------------------------------------------------
# Hermitian ensembles
# ---------------------------------------------------------------------------

def sample_gue(n, w, seed):
    """GUE matrix ``M = W / sqrt(n)`` with ``E|W_jk|^2 = 2 w^2``."""
    n = _check_n(n)
    w = _nonneg_scale("w", w)
    rng = child_rng(seed, tag="GUE")
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (g + g.conj().T) * (w / (SQRT2 * math.sqrt(n)))
    return HermitianSample(h, seed, "GUE")


def sample_goe(n, w, seed):
    """GOE matrix with off-diagonal variance ``w^2 / n`` and diagonal ``2 w^2 / n``."""
    n = _check_n(n)
    w = _nonneg_scale("w", w)
    rng = child_rng(seed, tag="GOE")
    g = rng.standard_normal((n, n))
    h = (g + g.T) * (w / (SQRT2 * math.sqrt(n)))
    return HermitianSample(h, seed, "GOE")


def sample_wigner(n, w, law, normalization="hermitian", seed=0):
    """Wigner matrix with i.i.d. entries (modulo symmetry) drawn from ``law``.

    ``"hermitian"`` uses amplitude ``sqrt(2) w`` everywhere (a complex law
    gets a real Gaussian diagonal). ``"real-symmetric-doubled-diagonal"``
    uses ``w`` off the diagonal and ``sqrt(2) w`` on it, i.e. the diagonal
    variance is doubled; it requires a real law.
    """
    n = _check_n(n)
    w = _nonneg_scale("w", w)
    _check_law(law)
    if normalization not in NORMALIZATIONS:
        raise InputError(f"unknown normalization {normalization!r}")
    rng = child_rng(seed, tag=f"Wigner/{law}")
    x = draw_entries(law, rng, (n, n))
    upper = np.triu(x, 1)
    if normalization == "hermitian":
        off, diag_amp = SQRT2 * w, SQRT2 * w
    else:
        if law == "complex-gaussian":
            raise InputError("doubled-diagonal normalization needs a real entry law")
        off, diag_amp = w, SQRT2 * w
    d = np.diag(x).real if law != "complex-gaussian" else draw_entries("real-gaussian", rng, n)
    h = off * (upper + upper.conj().T)
    h[np.diag_indices(n)] = diag_amp * d
    return HermitianSample(h / math.sqrt(n), seed, "WignerGeneral")


def sample_laguerre(n, a, seed):
    """``M = A A* / n`` with ``A`` n x n complex Gaussian, ``E|A_jk|^2 = 2 a^2``."""
    n = _check_n(n)
    a = _nonneg_scale("a", a)
    rng = child_rng(seed, tag="Laguerre")
    am = a * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    h = am @ am.conj().T / n
    return HermitianSample(_hermitize(h), seed, "Laguerre")


def sample_cov(n, m, t_values, law="complex-gaussian", seed=0):
    """Sample covariance ``M = A T A* / n`` with ``A`` n x m and ``T = diag(t)``."""
    n = _check_n(n)
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InputError("m must be a positive integer")
    t = np.asarray(t_values, dtype=float).ravel()
    if t.size != m or not np.all(np.isfinite(t)):
        raise InputError("t_values must be m finite numbers")
    rng = child_rng(seed, tag=f"SampleCovariance/{law}")
    am = draw_entries(law, rng, (n, m))
    h = (am * t) @ am.conj().T / n
    return HermitianSample(_hermitize(h), seed, "SampleCovariance")


def _hermitize(h):
    # remove rounding asymmetry of the Gram product
    return 0.5 * (h + h.conj().T)


def sample_haar_unitary(n, seed):
    """Haar unitary via QR of a complex Gaussian matrix with phases of ``diag(R)`` removed."""
    n = _check_n(n)
    rng = child_rng(seed, tag="Haar")
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / SQRT2
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def sample_cue_angles(n, seed):
    """Sorted eigenangles in ``[0, 2 pi)`` of a Haar unitary."""
    u = sample_haar_unitary(n, seed)
    ang = np.mod(np.angle(np.linalg.eigvals(u)), 2.0 * math.pi)
    return np.sort(ang)


def sample_free_sum(diag_a, diag_b, seed):
    """``A + U B U*`` for diagonal ``A``, ``B`` and Haar ``U``."""
    da = np.asarray(diag_a, dtype=float).ravel()
    db = np.asarray(diag_b, dtype=float).ravel()
    if da.size != db.size:
        raise InputError("diagonals must have equal length")
    if da.size == 0:
        raise InputError("empty diagonal")
    u = sample_haar_unitary(da.size, seed)
    h = np.diag(da).astype(complex) + (u * db) @ u.conj().T
    return HermitianSample(_hermitize(h), seed, "FreeSum")


def sample_deformed(base, noise, seed):
    """``H = H0 + M_noise``.

    ``base`` is a :class:`HermitianSample`, an ndarray, a list of diagonal
    values or an :class:`EnsembleSpec`; ``noise`` is an :class:`EnsembleSpec`.
    """
    if isinstance(base, EnsembleSpec):
        h0 = sample(base, child_rng(seed, tag="Deformed/base")).matrix
    elif isinstance(base, HermitianSample):
        h0 = base.matrix
    else:
        arr = np.asarray(base)
        h0 = np.diag(arr.astype(float)) if arr.ndim == 1 else arr
    if not isinstance(noise, EnsembleSpec):
        raise InputError("noise must be an EnsembleSpec")
    if noise.n != h0.shape[0]:
        raise InputError(f"dimension mismatch: base {h0.shape[0]} vs noise {noise.n}")
    hn = sample(noise, child_rng(seed, tag="Deformed/noise")).matrix
    return HermitianSample(h0 + hn, seed, "Deformed")


# ---------------------------------------------------------------------------
# invariant ensemble via its log-gas
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LogGasChain:
    """Recorded snapshots (``steps`` x ``n``, each row sorted) and acceptance rate."""

    samples: np.ndarray
    acceptance: float
    params: MCMCParams


_BLOCK = 1000


def run_loggas_chain(v, n, mcmc=MCMCParams(), seed=0, use_numba=None):
    """Metropolis chain for the density ``prod |x_i - x_j|^2 exp(-n sum V(x_i))``.

    Single-coordinate Gaussian random-walk proposals; random numbers are
    drawn in blocks by a numpy generator, so both kernel backends follow
    the same trajectory up to rounding.
    """
    if not isinstance(v, PotentialPolynomial):
        v = PotentialPolynomial(v)
    n = _check_n(n)
    rng = child_rng(seed, tag="InvariantLogGas")
    scale = mcmc.step_scale or 0.1 / math.sqrt(n)
    x = np.linspace(-1.0, 1.0, n) if n > 1 else np.zeros(1)
    accepted = 0
    total = 0

    def advance(sweeps):
        nonlocal accepted, total
        while sweeps > 0:
            b = min(sweeps, _BLOCK)
            steps = scale * rng.standard_normal((b, n))
            log_u = np.log(rng.random((b, n)))
            accepted += kernels.loggas_sweeps(x, v.coeffs, float(n), steps, log_u, use_numba)
            total += b * n
            sweeps -= b

    advance(mcmc.burn_in)
    out = np.empty((mcmc.steps, n))
    for k in range(mcmc.steps):
        advance(mcmc.thin)
        out[k] = np.sort(x)
    return LogGasChain(out, accepted / total if total else float("nan"), mcmc)


def sample_invariant(v, n, mcmc=MCMCParams(), seed=0):
    """One draw (the last recorded state) of the invariant-ensemble eigenvalues, sorted."""
    return run_loggas_chain(v, n, mcmc, seed).samples[-1]


# ---------------------------------------------------------------------------
# dispatch and linear algebra
# ---------------------------------------------------------------------------

def sample(spec, seed):
    """Sample the matrix described by ``spec``.

    Returns a :class:`HermitianSample`; for ``HaarUnitary`` the matrix is
    unitary rather than Hermitian, and ``InvariantLogGas`` is not a matrix
    family (use :func:`sample_spectrum`).
    """
    fam = spec.family
    if fam == "GUE":
        return sample_gue(spec.n, spec.w, seed)
    if fam == "GOE":
        return sample_goe(spec.n, spec.w, seed)
    if fam == "WignerGeneral":
        return sample_wigner(spec.n, spec.w, spec.law, spec.normalization, seed)
    if fam == "Laguerre":
        return sample_laguerre(spec.n, spec.a, seed)
    if fam == "SampleCovariance":
        return sample_cov(spec.n, spec.m, spec.t_values, spec.law or "complex-gaussian", seed)
    if fam == "HaarUnitary":
        return HermitianSample(sample_haar_unitary(spec.n, seed), seed, "HaarUnitary")
    if fam == "FreeSum":
        return sample_free_sum(spec.diag_a, spec.diag_b, seed)
    if fam == "Deformed":
        return sample_deformed(spec.base, spec.noise, seed)
    raise InputError(f"{fam} has no matrix sampler; use sample_spectrum")


def sample_spectrum(spec, seed):
    """Sorted eigenvalues (eigenangles for ``HaarUnitary``) of one draw of ``spec``."""
    if spec.family == "HaarUnitary":
        return sample_cue_angles(spec.n, seed)
    if spec.family == "InvariantLogGas":
        return sample_invariant(spec.potential, spec.n, spec.mcmc, seed)
    return eigenvalues(sample(spec, seed))


def eigenvalues(h):
    """Ascending eigenvalues of a Hermitian matrix or :class:`HermitianSample`."""
    mat = h.matrix if isinstance(h, HermitianSample) else np.asarray(h)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InputError("expected a square matrix")
    if not np.all(np.isfinite(mat)):
        raise InputError("matrix has non-finite entries")
    return np.linalg.eigvalsh(mat)


def rank_one_update(g_c, a, z):
    """Resolvent of ``C + L_a`` from the resolvent ``G_C = (C - z)^{-1}``.

    ``L_a x = (x, a) a``; returns ``G_C - G_C L_a G_C / (1 + (G_C a, a))``.
    """
    z = complex(z)
    if z.imag == 0:
        raise SpectralParameterError("real spectral parameter")
    g = np.asarray(g_c, dtype=complex)
    a = np.asarray(a, dtype=complex).ravel()
    if g.shape != (a.size, a.size):
        raise InputError("dimension mismatch between resolvent and vector")
    ga = g @ a
    denom = 1.0 + np.vdot(a, ga)
    if abs(denom) < 1e-14:
        raise PoleError("singular update")
    return g - np.outer(ga, a.conj() @ g) / denom
