"""Free additive convolution through subordination, and selfenergy arithmetic.

For spectral laws with Stieltjes transforms ``fA``, ``fB`` the transform
``f`` of their free convolution satisfies, with ``Delta_A, Delta_B``,

    f = fA(z - Delta_B / f),   f = fB(z - Delta_A / f),   z f = Delta_A + Delta_B - 1.

The solver iterates on the subordination arguments
``omega_A = z - Delta_B / f`` and ``omega_B = z - Delta_A / f``:

    f <- fA(omega_A),  omega_B <- z - 1/f - omega_A,
    f <- fB(omega_B),  omega_A <- z - 1/f - omega_B,

which keeps both arguments in the half-plane of ``z``.

The selfenergy ``Sigma`` is defined by ``f = -1 / (z + Sigma)``; viewed as a
function of ``f`` it is the R-transform, additive under free convolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_CONFIG
from .errors import ConvergenceError, DegenerateTransformError, InputError, SpectralParameterError
from .limit_laws import CONTINUATION_RATIO
from .measures import ComplexEvaluator, stieltjes_evaluator

__all__ = [
    "SubordinationState",
    "Selfenergy",
    "RAdditivityReport",
    "solve_free_addition",
    "free_addition_evaluator",
    "selfenergy_of",
    "r_transform",
    "verify_r_additivity",
]

DEGENERATE_TOL = 1e-14
NEWTON_SWITCH = 1e-3
POLISH_STEPS = 3
R_PATH_TOP = 100.0
R_PATH_RATIO = 0.7
R_PATH_MIN_STEP = 1e-9
BRANCH_STEP_TOL = 0.1


@dataclass(frozen=True)
class SubordinationState:
    """Solution of the subordination system at ``z``."""

    z: complex
    f: complex
    delta_A: complex
    delta_B: complex
    omega_A: complex
    omega_B: complex
    residuals: tuple
    iterations: int

    @property
    def residual(self):
        return max(self.residuals)


@dataclass(frozen=True)
class Selfenergy:
    sigma: complex


def _evaluator(x):
    if isinstance(x, ComplexEvaluator):
        return x
    if hasattr(x, "domain"):
        return stieltjes_evaluator(x)
    if callable(x):
        return ComplexEvaluator(func=x)
    raise InputError("expected a spectral measure or a Stieltjes evaluator")


def _residuals(z, f, oa, ob, fa_val, fb_val):
    da = (z - ob) * f
    db = (z - oa) * f
    scale = np.maximum(1.0, np.abs(f))
    return (
        np.abs(f - fa_val) / scale,
        np.abs(f - fb_val) / scale,
        np.abs(z * f - da - db + 1.0),
    )


def _level(z, oa, ob, fa, fb, cfg):
    """Solve at fixed ``z`` (arrays) from starting arguments ``oa, ob``."""
    z = np.asarray(z, dtype=complex)
    oa = np.array(oa, dtype=complex)
    ob = np.array(ob, dtype=complex)
    sgn = np.sign(z.imag)
    d = cfg.damping
    iters = np.zeros(z.shape, dtype=np.int64)
    active = np.ones(z.shape, dtype=bool)
    for it in range(cfg.max_iter + 1):
        za, a, b = z[active], oa[active], ob[active]
        va, vb = np.asarray(fa(a)), np.asarray(fb(b))
        if np.any(np.abs(va) < DEGENERATE_TOL) or np.any(np.abs(vb) < DEGENERATE_TOL):
            raise DegenerateTransformError("degenerate transform")
        # one sweep of the map omega_A -> G(omega_A)
        b_new = za - 1.0 / va - a
        vb_new = np.asarray(fb(b_new))
        a_new = za - 1.0 / vb_new - b_new
        # omega_B = z - 1/f - omega_A makes the third equation exact, so the
        # remaining residual is the mismatch fA(omega_A) - fB(omega_B)
        r = np.abs(va - vb_new) / np.maximum(1.0, np.abs(va))
        done = r <= cfg.tol
        if it == cfg.max_iter:
            break
        step = a + d * (a_new - a)
        # Newton on F(a) = G(a) - a using dG/da from the evaluator derivatives
        dva = np.asarray(fa.deriv(a))
        dvb = np.asarray(fb.deriv(b_new))
        db_da = dva / va ** 2 - 1.0
        dG = (dvb / vb_new ** 2 - 1.0) * db_da
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = a - (a_new - a) / (dG - 1.0)
        use = (r < NEWTON_SWITCH) & np.isfinite(newton) & (newton.imag * sgn[active] > 0)
        if use.any():
            van = np.asarray(fa(newton[use]))
            bn = za[use] - 1.0 / van - newton[use]
            ok_b = bn.imag * sgn[active][use] > 0
            vbn = np.asarray(fb(np.where(ok_b, bn, b_new[use])))
            rn = np.abs(van - vbn) / np.maximum(1.0, np.abs(van))
            good = ok_b & (rn < r[use])
            idx = np.flatnonzero(use)[good]
            step[idx] = newton[use][good]
        step = np.where(done, a, step)
        oa[active] = step
        ob[active] = np.where(done, b_new, za - 1.0 / np.asarray(fa(step)) - step)
        iters[active] += ~done
        still = active.copy()
        still[active] = ~done
        active = still
        if not active.any():
            break
    f = np.asarray(fa(oa), dtype=complex)
    ob = z - 1.0 / f - oa
    return f, oa, ob, iters


def solve_free_addition(z, fA, fB, cfg=DEFAULT_CONFIG):
    """Solve the subordination system for the free convolution of A and B.

    Parameters
    ----------
    z : complex or array_like
        Non-real spectral parameter(s).
    fA, fB : ComplexEvaluator, callable or spectral measure
        Stieltjes transforms of the two laws.
    cfg : SolverConfig

    Returns
    -------
    SubordinationState or list of SubordinationState
        ``residuals`` holds the three equation residuals.

    Raises
    ------
    DegenerateTransformError
        If a transform value falls below ``1e-14`` in magnitude.
    ConvergenceError
        If the largest residual exceeds ``cfg.tol``.
    """
    fa, fb = _evaluator(fA), _evaluator(fB)
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr.imag == 0):
        raise SpectralParameterError("real spectral parameter")
    zf = z_arr.ravel()
    y = np.abs(zf.imag)
    sgn = np.sign(zf.imag)
    floor = np.maximum(y, cfg.y_min)
    heights = [cfg.y_start]
    while heights[-1] > floor.min():
        heights.append(heights[-1] * CONTINUATION_RATIO)
    rows = [np.where(y >= cfg.y_start, y, np.maximum(h, floor)) for h in heights]
    if np.any(y < cfg.y_min):
        rows.append(y)
    oa = ob = None
    total = np.zeros(zf.shape, dtype=np.int64)
    for row in rows:
        zl = zf.real + 1j * sgn * row
        if oa is None:
            # omega = z is exact when both laws are the point mass at 0
            oa, ob = zl.copy(), zl.copy()
        f, oa, ob, it = _level(zl, oa, ob, fa, fb, cfg)
        total += it
    va, vb = np.asarray(fa(oa)), np.asarray(fb(ob))
    r1, r2, r3 = _residuals(zf, f, oa, ob, va, vb)
    worst = np.maximum(np.maximum(r1, r2), r3)
    if np.any(~(worst <= cfg.tol)):
        raise ConvergenceError(
            f"free addition did not converge at {int(np.sum(~(worst <= cfg.tol)))} points",
            residual=float(np.nanmax(worst)),
            iterations=int(total.max()),
        )
    states = [
        SubordinationState(
            complex(zf[i]), complex(f[i]), complex((zf[i] - ob[i]) * f[i]), complex((zf[i] - oa[i]) * f[i]),
            complex(oa[i]), complex(ob[i]), (float(r1[i]), float(r2[i]), float(r3[i])), int(total[i]),
        )
        for i in range(zf.size)
    ]
    return states[0] if z_arr.ndim == 0 else states


def free_addition_evaluator(fA, fB, cfg=DEFAULT_CONFIG):
    """:class:`ComplexEvaluator` for the transform of the free convolution."""
    def func(z):
        z = np.asarray(z, dtype=complex)
        states = solve_free_addition(z.ravel(), fA, fB, cfg)
        return np.array([s.f for s in states]).reshape(z.shape)

    return ComplexEvaluator(func=func, label="free convolution")


def selfenergy_of(f, z):
    """Selfenergy ``Sigma = -1/f(z) - z``."""
    fe = _evaluator(f)
    val = complex(fe(z))
    if abs(val) < DEGENERATE_TOL:
        raise DegenerateTransformError("degenerate transform: f(z) = 0")
    return Selfenergy(-1.0 / val - complex(z))


def _invert(fe, s, cfg, z0=None):
    """Solve ``f(z) = s`` by Newton's method started at ``z0`` (default ``-1/s``).

    Once the tolerance is met, up to ``POLISH_STEPS`` further Newton steps
    are taken while they keep reducing ``|f(z) - s|``.
    """
    z = -1.0 / s if z0 is None else complex(z0)
    want = np.sign(s.imag)
    err = complex(fe(z)) - s
    polish = 0
    for it in range(cfg.max_iter):
        if abs(err) <= cfg.tol * max(1.0, abs(s)):
            polish += 1
            if polish > POLISH_STEPS or err == 0:
                return z, it
        step = err / complex(fe.deriv(z))
        t = 1.0
        while True:
            zn = z - t * step
            if zn.imag * want > 0:
                errn = complex(fe(zn)) - s
                if abs(errn) < abs(err):
                    break
            t *= 0.5
            if t < 1e-12:
                if polish:
                    return z, it
                raise ConvergenceError("R-transform inversion stalled", abs(err), it)
        z, err = zn, errn
    raise ConvergenceError("R-transform inversion did not converge", abs(err), cfg.max_iter)


def r_transform(f, s, cfg=DEFAULT_CONFIG, start=None):
    """R-transform ``R(s) = -1/s - z(s)`` where ``f(z(s)) = s``.

    ``f(z) = s`` can have several solutions in the half-plane of ``s``;
    ``start`` selects the branch by seeding Newton's method (default
    ``-1/s``, the branch near ``s = 0``).
    """
    fe = _evaluator(f)
    s = complex(s)
    if s.imag == 0:
        raise InputError("s must be non-real")
    z, _ = _invert(fe, s, cfg, start)
    return -1.0 / s - z


@dataclass
class RAdditivityReport:
    max_deviation: float
    deviations: np.ndarray
    points: np.ndarray


def _track_branch(fe, w, s_old, s_new, cfg):
    """Continue the solution ``w`` of ``f(w) = s_old`` to ``s_new``.

    Returns None when the Newton correction is large compared with the
    predicted move, i.e. when the step may have switched branches.
    """
    move = (s_new - s_old) / complex(fe.deriv(w))
    pred = w + move
    try:
        w_new, _ = _invert(fe, s_new, cfg, pred)
    except ConvergenceError:
        return None
    if abs(w_new - pred) > BRANCH_STEP_TOL * abs(move) + 1e-13 * max(1.0, abs(w)):
        return None
    return w_new


def verify_r_additivity(fA, fB, z_points, cfg=DEFAULT_CONFIG):
    """Check ``R(s) = R_A(s) + R_B(s)`` at ``s = f(z)`` for the free convolution ``f``.

    ``R(s) = -1/s - z`` is known exactly at ``s = f(z)``. ``R_A`` and ``R_B``
    are the analytic continuations of the inverse functions of ``f_A`` and
    ``f_B`` from the branch near ``s = 0``: they are tracked by
    predictor-corrector steps along the vertical path from ``Re z + i H``
    down to ``z``, with step halving wherever a correction is large.
    """
    fa, fb = _evaluator(fA), _evaluator(fB)
    pts = np.atleast_1d(np.asarray(z_points, dtype=complex))
    dev = np.empty(pts.size)
    for i, z in enumerate(pts):
        if z.imag == 0:
            raise InputError("z must be non-real")
        sign = math.copysign(1.0, z.imag)
        y_end = abs(z.imag)
        y = max(R_PATH_TOP, 10.0 * abs(z))
        s = solve_free_addition(complex(z.real, sign * y), fa, fb, cfg).f
        wa, _ = _invert(fa, s, cfg)
        wb, _ = _invert(fb, s, cfg)
        ratio = R_PATH_RATIO
        while y > y_end:
            y_next = max(y * ratio, y_end)
            s_next = solve_free_addition(complex(z.real, sign * y_next), fa, fb, cfg).f
            na = _track_branch(fa, wa, s, s_next, cfg)
            nb = _track_branch(fb, wb, s, s_next, cfg) if na is not None else None
            if na is None or nb is None:
                ratio = 1.0 - 0.5 * (1.0 - ratio)
                if 1.0 - ratio < R_PATH_MIN_STEP:
                    raise ConvergenceError("R-transform branch tracking failed", float("nan"), 0)
                continue
            y, s, wa, wb = y_next, s_next, na, nb
            ratio = max(R_PATH_RATIO, 1.0 - 2.0 * (1.0 - ratio))
        # R = R_A + R_B with R(s) = -1/s - z and R_A(s) = -1/s - w_A
        dev[i] = abs(wa + wb - z + 1.0 / s)
    return RAdditivityReport(float(dev.max()), dev, pts)
