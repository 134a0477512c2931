"""Hot inner loops, each with a numba kernel and a pure-numpy twin.

``loggas_sweeps``
    Metropolis coordinate sweeps for the beta=2 log-gas
    ``prod_{i<j} |x_i - x_j|^2 exp(-n sum V(x_i))``.
``mp_fixed_point``
    Damped fixed-point / safeguarded Newton solve of
    ``f = -1 / (z - c sum_k p_k t_k / (1 + t_k f))`` at many spectral
    parameters at once.
``hybrid_fixed_point``
    Vectorized numpy solver for ``f = T(f)`` with an arbitrary vectorized
    right-hand side; ``mp_fixed_point`` falls back to it without numba.

Random numbers are always drawn by the caller, so both backends consume
identical streams.
"""
import math

import numpy as np

from ._accel import HAS_NUMBA, njit

POLE_TOL = 1e-12
NEWTON_SWITCH = 1e-2
NEWTON_AFTER = 50


# ---------------------------------------------------------------------------
# log-gas Metropolis
# ---------------------------------------------------------------------------

@njit(cache=True)
def _horner(coeffs, x):
    acc = 0.0
    for k in range(coeffs.size - 1, -1, -1):
        acc = acc * x + coeffs[k]
    return acc


@njit(cache=True)
def _loggas_sweeps_nb(x, coeffs, weight, steps, log_u):
    n = x.size
    accepted = 0
    for s in range(steps.shape[0]):
        for i in range(n):
            xi = x[i]
            xn = xi + steps[s, i]
            de = weight * (_horner(coeffs, xn) - _horner(coeffs, xi))
            rep = 0.0
            for j in range(n):
                if j != i:
                    rep += math.log(abs((xn - x[j]) / (xi - x[j])))
            de -= 2.0 * rep
            if log_u[s, i] < -de:
                x[i] = xn
                accepted += 1
    return accepted


def _loggas_sweeps_py(x, coeffs, weight, steps, log_u):
    n = x.size
    accepted = 0
    poly = np.polynomial.polynomial.polyval
    idx = np.arange(n)
    for s in range(steps.shape[0]):
        for i in range(n):
            xi = x[i]
            xn = xi + steps[s, i]
            others = x[idx != i]
            de = weight * (poly(xn, coeffs) - poly(xi, coeffs))
            with np.errstate(divide="ignore"):
                de -= 2.0 * np.log(np.abs((xn - others) / (xi - others))).sum()
            if log_u[s, i] < -de:
                x[i] = xn
                accepted += 1
    return accepted


def loggas_sweeps(x, coeffs, weight, steps, log_u, use_numba=None):
    """Run ``steps.shape[0]`` Metropolis sweeps in place on ``x``.

    Parameters
    ----------
    x : ndarray, shape (n,)
        Current particle positions, modified in place.
    coeffs : ndarray
        Potential coefficients, ascending degree.
    weight : float
        Confinement strength (``n`` for the invariant ensemble).
    steps : ndarray, shape (sweeps, n)
        Proposed displacements.
    log_u : ndarray, shape (sweeps, n)
        Logarithms of uniform variates for the acceptance test.

    Returns
    -------
    int
        Number of accepted moves.
    """
    use_numba = HAS_NUMBA if use_numba is None else (use_numba and HAS_NUMBA)
    coeffs = np.ascontiguousarray(coeffs, dtype=float)
    steps = np.ascontiguousarray(steps, dtype=float)
    log_u = np.ascontiguousarray(log_u, dtype=float)
    if use_numba:
        return int(_loggas_sweeps_nb(x, coeffs, float(weight), steps, log_u))
    return _loggas_sweeps_py(x, coeffs, float(weight), steps, log_u)


# ---------------------------------------------------------------------------
# fixed-point solvers
# ---------------------------------------------------------------------------

def hybrid_fixed_point(z, rhs, f0, damping, tol, max_iter):
    """Solve ``f = T(f)`` pointwise by damped iteration with Newton polishing.

    ``rhs(f, z, mask)`` must return ``(T(f), dT/df, pole)`` for the entries
    selected by ``mask``; ``pole`` flags vanishing denominators. A Newton
    step is taken only when it keeps ``Im f * Im z > 0`` and lowers the
    residual ``|f - T(f)| / max(1, |f|)``; otherwise the damped step is used.

    Returns
    -------
    f, iterations, residual, pole : ndarrays
    """
    z = np.asarray(z, dtype=complex)
    f = np.array(f0, dtype=complex, copy=True)
    iters = np.zeros(z.shape, dtype=np.int64)
    resid = np.full(z.shape, np.inf)
    pole = np.zeros(z.shape, dtype=bool)
    active = np.ones(z.shape, dtype=bool)
    sgn = np.sign(z.imag)
    for it in range(max_iter + 1):
        if not active.any():
            break
        fa, za = f[active], z[active]
        t, dt, pl = rhs(fa, za, active)
        r = np.abs(fa - t) / np.maximum(1.0, np.abs(fa))
        resid[active] = r
        pole[active] |= pl
        done = (r <= tol) | pl
        if it == max_iter:
            break
        step_d = fa + damping * (t - fa)
        denom = 1.0 - dt
        with np.errstate(divide="ignore", invalid="ignore"):
            step_n = fa - (fa - t) / denom
        try_n = ((r < NEWTON_SWITCH) | (it >= NEWTON_AFTER)) & np.isfinite(step_n) & (step_n.imag * sgn[active] > 0)
        new = step_d
        if try_n.any():
            sub = active.copy()
            sub[active] = try_n
            tn, _, pn = rhs(step_n[try_n], za[try_n], sub)
            rn = np.abs(step_n[try_n] - tn) / np.maximum(1.0, np.abs(step_n[try_n]))
            good = (rn < r[try_n]) & ~pn
            pick = np.zeros_like(try_n)
            pick[try_n] = good
            new = np.where(pick, step_n, step_d)
        new = np.where(done, fa, new)
        f[active] = new
        iters[active] += ~done
        still = active.copy()
        still[active] = ~done
        active = still
    return f, iters, resid, pole


@njit(cache=True)
def _mp_eval(f, z, c, t, p):
    s1 = 0j
    s2 = 0j
    pole = False
    for k in range(t.size):
        d = 1.0 + t[k] * f
        if abs(d) < POLE_TOL:
            pole = True
            d = POLE_TOL
        s1 += p[k] * t[k] / d
        s2 += p[k] * t[k] * t[k] / (d * d)
    zeta = z - c * s1
    val = -1.0 / zeta
    deriv = c * s2 / (zeta * zeta)
    return val, deriv, pole


@njit(cache=True)
def _mp_fixed_point_nb(z, f0, c, t, p, damping, tol, max_iter):
    m = z.size
    f_out = np.empty(m, dtype=np.complex128)
    iters = np.zeros(m, dtype=np.int64)
    resid = np.empty(m)
    poles = np.zeros(m, dtype=np.bool_)
    for q in range(m):
        zq = z[q]
        f = f0[q]
        sgn = 1.0 if zq.imag > 0 else -1.0
        r = np.inf
        it = 0
        while True:
            val, dv, pl = _mp_eval(f, zq, c, t, p)
            r = abs(f - val) / max(1.0, abs(f))
            if pl:
                poles[q] = True
                break
            if r <= tol or it == max_iter:
                break
            step = f + damping * (val - f)
            if r < NEWTON_SWITCH or it >= NEWTON_AFTER:
                fn = f - (f - val) / (1.0 - dv)
                if fn.imag * sgn > 0 and np.isfinite(fn.real) and np.isfinite(fn.imag):
                    vn, _, pn = _mp_eval(fn, zq, c, t, p)
                    rn = abs(fn - vn) / max(1.0, abs(fn))
                    if rn < r and not pn:
                        step = fn
            f = step
            it += 1
        f_out[q] = f
        iters[q] = it
        resid[q] = r
    return f_out, iters, resid, poles


def _mp_rhs(c, t, p):
    def rhs(f, z, mask):
        d = 1.0 + t[None, :] * f[:, None]
        pole = np.any(np.abs(d) < POLE_TOL, axis=1)
        d = np.where(np.abs(d) < POLE_TOL, POLE_TOL, d)
        s1 = (p * t / d).sum(axis=1)
        s2 = (p * t * t / (d * d)).sum(axis=1)
        zeta = z - c * s1
        return -1.0 / zeta, c * s2 / (zeta * zeta), pole

    return rhs


def mp_fixed_point(z, f0, c, t, p, damping, tol, max_iter, use_numba=None):
    """Solve the Marchenko-Pastur equation at every entry of ``z``.

    ``t`` and ``p`` are the nodes and weights of the population measure
    (atoms, or grid nodes times quadrature weights).
    """
    use_numba = HAS_NUMBA if use_numba is None else (use_numba and HAS_NUMBA)
    z = np.ascontiguousarray(np.asarray(z, dtype=complex).ravel())
    f0 = np.ascontiguousarray(np.asarray(f0, dtype=complex).ravel())
    t = np.ascontiguousarray(t, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    if use_numba:
        return _mp_fixed_point_nb(z, f0, float(c), t, p, float(damping), float(tol), int(max_iter))
    return hybrid_fixed_point(z, _mp_rhs(float(c), t, p), f0, damping, tol, max_iter)
