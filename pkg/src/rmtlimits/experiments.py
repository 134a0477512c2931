"""Monte Carlo checks of the convergence statements.

Every experiment draws independent trials from child streams
``(seed, trial, tag)``, stores per-trial values by trial index and reduces
them with exactly rounded sums (:func:`math.fsum`), so reports do not
depend on thread count or completion order.

Statistics of the normalized trace of the resolvent
``g_n(z) = (1/n) Tr (M - z)^{-1}`` (or of the Herglotz analogue
``h_n(z) = (1/n) Tr (U + z)(U - z)^{-1}`` for Haar unitaries) are
compared with the analytic limits.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from .ensembles import (
    EnsembleSpec,
    MCMCParams,
    child_rng,
    eigenvalues,
    entry_excess,
    run_loggas_chain,
    sample,
    sample_haar_unitary,
    sample_wigner,
)
from .equilibrium import PotentialPolynomial, equilibrium_measure
from .errors import InputError, SpectralParameterError
from .limit_laws import circular_limit_herglotz, semicircle_stieltjes
from .measures import Named, empirical_measure, ks_distance

__all__ = [
    "ExperimentReport",
    "TrialSummary",
    "SlopeFit",
    "resolvent_trace",
    "herglotz_trace",
    "summarize",
    "fit_loglog",
    "f_sc",
    "expansion_bracket",
    "clt_covariance",
    "run_variance_sweep",
    "run_expansion_check",
    "run_clt_check",
    "run_lindeberg_demo",
    "run_mv_check",
]

SLOPE_WINDOW = (-2.4, -1.6)
EXPANSION_REL_TOL = 0.2
CLT_REL_TOL = 0.25
LINDEBERG_PASS = 0.05
LINDEBERG_FAIL = 0.1
MV_REL_TOL = 0.05
ACCEPTANCE_WINDOW = (0.1, 0.9)
SEMICIRCLE_FAMILIES = ("GUE", "GOE", "WignerGeneral")


# ---------------------------------------------------------------------------
# reports and reductions
# ---------------------------------------------------------------------------

@dataclass
class ExperimentReport:
    """Outcome of one experiment.

    ``per_n`` holds one row of statistics per matrix size; ``verdicts`` maps
    check names to booleans.
    """

    experiment: str
    config: dict
    per_n: list = field(default_factory=list)
    fit: dict | None = None
    distances: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.verdicts.values())

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out


@dataclass(frozen=True)
class TrialSummary:
    """Mean, unbiased variance ``E|g - Eg|^2`` and their standard errors."""

    mean: complex
    variance: float
    stderr_mean: float
    stderr_variance: float
    trials: int


def _fsum_complex(values):
    v = np.asarray(values, dtype=complex)
    return complex(math.fsum(v.real), math.fsum(v.imag))


def summarize(values):
    """Order-independent summary of complex per-trial values (two-pass, exact sums)."""
    v = np.asarray(values, dtype=complex).ravel()
    t = v.size
    if t < 2:
        raise InputError("need at least 2 trials")
    mean = _fsum_complex(v) / t
    dev2 = np.abs(v - mean) ** 2
    var = math.fsum(dev2) / (t - 1)
    m4 = math.fsum(dev2 * dev2) / t
    se_var = math.sqrt(max(m4 - var * var, 0.0) / t)
    return TrialSummary(mean, var, math.sqrt(var / t), se_var, t)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    half_width: float


def fit_loglog(n_list, values):
    """Least-squares slope of ``log(values)`` against ``log(n)`` with a 95% half-width."""
    x = np.log(np.asarray(n_list, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 3:
        raise InputError("slope fit needs at least 3 n-values")
    res = stats.linregress(x, y)
    half = float(stats.t.ppf(0.975, x.size - 2) * res.stderr)
    return SlopeFit(float(res.slope), float(res.intercept), half)


def _map_trials(fn, trials, threads):
    if threads is None or threads <= 1:
        return [fn(k) for k in range(trials)]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, range(trials)))


# ---------------------------------------------------------------------------
# statistics of one matrix
# ---------------------------------------------------------------------------

def resolvent_trace(eigs, z):
    """``g_n(z) = (1/n) sum_k 1 / (l_k - z)`` at each entry of ``z``."""
    lam = np.asarray(eigs, dtype=float).ravel()
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.imag == 0):
        raise SpectralParameterError("real spectral parameter")
    return (1.0 / (lam[None, :] - z[:, None])).mean(axis=1)


def herglotz_trace(u, z):
    """``h_n(z) = 1 + (2z/n) Tr (U - z)^{-1}`` at each entry of ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(np.abs(z) - 1.0) <= 1e-12):
        raise SpectralParameterError("spectral parameter on unit circle")
    n = u.shape[0]
    eye = np.eye(n)
    return np.array([1.0 + 2.0 * zz * np.trace(np.linalg.inv(u - zz * eye)) / n for zz in z])


def _trial_values(spec, seed, z, tag):
    """Per-trial statistic for ``spec`` at the points ``z``."""
    def one(k):
        rng = child_rng(seed, k, tag)
        if spec.family == "HaarUnitary":
            return herglotz_trace(sample_haar_unitary(spec.n, rng), z)
        return resolvent_trace(eigenvalues(sample(spec, rng)), z)

    return one


# ---------------------------------------------------------------------------
# analytic targets
# ---------------------------------------------------------------------------

def f_sc(z, w=1.0):
    """Transform of the semicircle of radius ``2w``: root of ``w^2 f^2 + z f + 1 = 0``."""
    return semicircle_stieltjes(z, w, beta=1)


def expansion_bracket(z, w=1.0, sigma=0.0):
    """First-order coefficient ``lim n (E g_n - f_sc)``.

    ``f [w^2 f^2 / (1 - w^2 f^2)^2 + sigma f^4 / (1 - w^2 f^2)]`` with
    ``f = f_sc(z)`` and ``sigma`` the fourth cumulant of the entries.
    """
    f = f_sc(z, w)
    q = 1.0 - w * w * f * f
    return f * (w * w * f * f / q ** 2 + sigma * f ** 4 / q)


def clt_covariance(z1, z2, w=1.0, sigma=0.0):
    """Limiting covariance ``c(z1, z2)`` of ``n (g_n - E g_n)``."""
    f1, f2 = f_sc(z1, w), f_sc(z2, w)
    w2 = w * w
    if z1 == z2:
        dd = -f1 / (2.0 * w2 * f1 + z1)
    else:
        dd = (f1 - f2) / (z1 - z2)
    pref = 2.0 * w2 / ((1.0 - w2 * f1 * f1) * (1.0 - w2 * f2 * f2))
    return pref * (w2 * dd * dd + sigma * f1 ** 3 * f2 ** 3)


def _analytic_limit(spec, z):
    if spec.family == "GUE":
        return complex(semicircle_stieltjes(z, spec.w, 2))
    if spec.family == "GOE":
        return complex(f_sc(z, spec.w))
    if spec.family == "WignerGeneral":
        beta = 2 if spec.normalization == "hermitian" else 1
        return complex(semicircle_stieltjes(z, spec.w, beta))
    if spec.family == "HaarUnitary":
        return complex(circular_limit_herglotz(z))
    return None


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_variance_sweep(spec, n_list, trials, z=None, seed=0, threads=1):
    """Variance of ``g_n(z)`` (``h_n(z)`` for Haar unitaries) versus ``n`` and its log-log slope.

    ``z`` defaults to ``5i w`` for semicircle-type families and ``0.2``
    for the circular case.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3:
        raise InputError("variance sweep needs at least 3 n-values")
    if trials < 2:
        raise InputError("need at least 2 trials")
    circular = spec.family == "HaarUnitary"
    if z is None:
        z = 0.2 if circular else 5j * (spec.w or 1.0)
    z = complex(z)
    if spec.family in SEMICIRCLE_FAMILIES and abs(z.imag) < 5.0 * spec.w:
        raise InputError("variance sweep needs |Im z| >= 5w")
    if circular and abs(z) > 0.25:
        raise InputError("circular variance sweep needs |z| <= 1/4")
    rows, variances = [], []
    for n in n_list:
        sp = replace(spec, n=n)
        one = _trial_values(sp, seed, z, f"variance/{spec.family}/{n}")
        vals = np.array([v[0] for v in _map_trials(one, trials, threads)])
        s = summarize(vals)
        limit = _analytic_limit(sp, z)
        rows.append({
            "n": n,
            "mean_re": s.mean.real,
            "mean_im": s.mean.imag,
            "var": s.variance,
            "stderr": s.stderr_mean,
            "stderr_var": s.stderr_variance,
            "abs_dev_limit": None if limit is None else abs(s.mean - limit),
        })
        variances.append(s.variance)
    fit = fit_loglog(n_list, variances)
    return ExperimentReport(
        experiment="variance_sweep",
        config={"family": spec.family, "n_list": n_list, "trials": trials,
                "z": [z.real, z.imag], "seed": seed},
        per_n=rows,
        fit=asdict(fit),
        verdicts={"slope_in_window": SLOPE_WINDOW[0] <= fit.slope <= SLOPE_WINDOW[1]},
    )


def run_expansion_check(law, w, n_list, trials, z=None, seed=0, threads=1):
    """Compare ``n (mean g_n - f_sc)`` with the first-order bracket.

    Uses the real symmetric Wigner normalization with doubled diagonal
    variance, for which the limit is the semicircle of radius ``2w``.
    """
    if law in ("cauchy", "complex-gaussian"):
        raise InputError(f"expansion check needs a real law with finite moments, not {law!r}")
    n_list = [int(n) for n in n_list]
    if trials < 2:
        raise InputError("need at least 2 trials")
    z = complex(5j * w if z is None else z)
    if abs(z.imag) < 5.0 * w:
        raise InputError("expansion check needs |Im z| >= 5w")
    sigma = entry_excess(law) * w ** 4
    target = complex(expansion_bracket(z, w, sigma))
    f0 = complex(f_sc(z, w))
    rows = []
    for n in n_list:
        def one(k, n=n):
            rng = child_rng(seed, k, f"expansion/{law}/{n}")
            h = sample_wigner(n, w, law, "real-symmetric-doubled-diagonal", rng)
            return resolvent_trace(eigenvalues(h), z)[0]

        s = summarize(_map_trials(one, trials, threads))
        obs = n * (s.mean - f0)
        rows.append({
            "n": n,
            "mean_re": s.mean.real,
            "mean_im": s.mean.imag,
            "var": s.variance,
            "stderr": s.stderr_mean,
            "scaled_re": obs.real,
            "scaled_im": obs.imag,
            "scaled_stderr": n * s.stderr_mean,
            "rel_err": abs(obs - target) / abs(target),
        })
    collapse = abs(target - complex(expansion_bracket(z / w, 1.0, sigma / w ** 4)) / w)
    return ExperimentReport(
        experiment="expansion_check",
        config={"law": law, "w": w, "n_list": n_list, "trials": trials,
                "z": [z.real, z.imag], "seed": seed},
        per_n=rows,
        diagnostics={"sigma": sigma, "bracket_re": target.real, "bracket_im": target.imag,
                     "f_sc_re": f0.real, "f_sc_im": f0.imag, "scale_collapse": collapse},
        verdicts={"bracket_within_20pct": rows[-1]["rel_err"] <= EXPANSION_REL_TOL,
                  "scale_collapse": collapse <= 1e-12 * max(1.0, abs(target))},
    )


def _moment_bands(x, trials):
    skew = float(stats.skew(x, bias=False))
    kurt = float(stats.kurtosis(x, fisher=True, bias=False))
    return skew, kurt, 3.0 * math.sqrt(6.0 / trials), 3.0 * math.sqrt(24.0 / trials)


def run_clt_check(w, n, trials, z1=None, z2=None, seed=0, law="real-gaussian", threads=1):
    """Covariance and normality of ``n (g_n - E g_n)`` at ``z1, z2``.

    Matrices are real symmetric Wigner with doubled diagonal variance
    (GOE-type for Gaussian entries).
    """
    if trials < 100:
        raise InputError("CLT check needs at least 100 trials")
    z1 = complex(5j * w if z1 is None else z1)
    z2 = complex(z1 if z2 is None else z2)
    if min(abs(z1.imag), abs(z2.imag)) < 5.0 * w:
        raise InputError("CLT check needs |Im z| >= 5w")
    sigma = entry_excess(law) * w ** 4

    def one(k):
        rng = child_rng(seed, k, f"clt/{law}/{n}")
        h = sample_wigner(n, w, law, "real-symmetric-doubled-diagonal", rng)
        return resolvent_trace(eigenvalues(h), [z1, z2])

    vals = np.array(_map_trials(one, trials, threads))
    s1, s2 = summarize(vals[:, 0]), summarize(vals[:, 1])
    x1 = n * (vals[:, 0] - s1.mean)
    x2 = n * (vals[:, 1] - s2.mean)
    var1 = n * n * s1.variance
    cov12 = _fsum_complex(x1 * x2) / (trials - 1)
    cov12_se = math.sqrt(max(math.fsum(np.abs(x1 * x2 - cov12) ** 2) / (trials - 1), 0.0) / trials)
    c_var = complex(clt_covariance(z1, z1.conjugate(), w, sigma))
    c12 = complex(clt_covariance(z1, z2, w, sigma))
    diag = {"var": var1, "c_var_re": c_var.real, "c_var_im": c_var.imag,
            "cov12_re": cov12.real, "cov12_im": cov12.imag, "cov12_stderr": cov12_se,
            "c12_re": c12.real, "c12_im": c12.imag, "sigma": sigma}
    verdicts = {"variance_within_25pct": abs(var1 / c_var.real - 1.0) <= CLT_REL_TOL}
    for part, xs in (("re", x1.real), ("im", x1.imag)):
        if np.allclose(xs, 0.0):
            continue
        skew, kurt, sb, kb = _moment_bands(xs, trials)
        diag.update({f"skew_{part}": skew, f"kurt_{part}": kurt, "skew_band": sb, "kurt_band": kb})
        verdicts[f"skew_{part}"] = abs(skew) <= sb
        verdicts[f"kurt_{part}"] = abs(kurt) <= kb
    if z2 == z1.conjugate():
        verdicts["conjugate_real"] = abs(cov12.imag) <= 3.0 * cov12_se
    return ExperimentReport(
        experiment="clt_check",
        config={"w": w, "n": n, "trials": trials, "z1": [z1.real, z1.imag],
                "z2": [z2.real, z2.imag], "law": law, "seed": seed},
        per_n=[{"n": n, "mean_re": s1.mean.real, "mean_im": s1.mean.imag,
                "var": s1.variance, "stderr": s1.stderr_mean}],
        diagnostics=diag,
        verdicts=verdicts,
    )


def run_lindeberg_demo(laws, n, trials, seed=0, w=1.0, threads=1):
    """Mean KS distance to the semicircle for Wigner matrices with each entry law.

    Laws with finite variance are expected to give KS <= 0.05; ``cauchy``
    is expected to stay at KS >= 0.1.
    """
    if n < 256:
        raise InputError("Lindeberg demo needs n >= 256")
    target = Named("semicircle", {"w": float(w), "beta": 2})
    distances, verdicts = {}, {}
    for law in laws:
        def one(k, law=law):
            rng = child_rng(seed, k, f"lindeberg/{law}/{n}")
            eigs = eigenvalues(sample_wigner(n, w, law, "hermitian", rng))
            return ks_distance(empirical_measure(eigs), target).value

        ks = np.array(_map_trials(one, trials, threads))
        mean = math.fsum(ks) / ks.size
        distances[law] = {"ks_mean": mean, "ks_max": float(ks.max()), "ks_min": float(ks.min())}
        expect_fail = law == "cauchy"
        distances[law]["expected"] = "fail" if expect_fail else "pass"
        verdicts[law] = mean >= LINDEBERG_FAIL if expect_fail else mean <= LINDEBERG_PASS
    return ExperimentReport(
        experiment="lindeberg_demo",
        config={"laws": list(laws), "n": n, "trials": trials, "w": w, "seed": seed},
        distances=distances,
        verdicts=verdicts,
    )


def run_mv_check(v, n, mcmc=None, seed=0, batches=20):
    """Estimate ``E (1/n) sum l V'(l)`` over log-gas samples and compare with 1.

    The standard error uses batch means over the recorded snapshots. The
    report also gives the KS distance between the pooled snapshots and the
    equilibrium law (for ``n > 1``).
    """
    if not isinstance(v, PotentialPolynomial):
        v = PotentialPolynomial(v)
    mcmc = mcmc or MCMCParams(steps=2000, burn_in=100_000, thin=10)
    chain = run_loggas_chain(v, n, mcmc, seed)
    per = (chain.samples * v.deriv(chain.samples)).mean(axis=1)
    est = math.fsum(per) / per.size
    k = max(1, min(batches, per.size))
    means = [math.fsum(b) / b.size for b in np.array_split(per, k)]
    se = float(np.std(means, ddof=1) / math.sqrt(k)) if k > 1 else float("nan")
    lo, hi = ACCEPTANCE_WINDOW
    diag = {"estimate": est, "stderr": se, "acceptance": chain.acceptance, "snapshots": int(per.size)}
    if not lo <= chain.acceptance <= hi:
        warnings.warn(f"MCMC acceptance rate {chain.acceptance:.3f} outside [{lo}, {hi}]",
                      RuntimeWarning, stacklevel=2)
        diag["acceptance_warning"] = True
    distances = {}
    if n > 1:
        distances["ks_equilibrium"] = ks_distance(empirical_measure(chain.samples.ravel()),
                                                  equilibrium_measure(v)).value
    return ExperimentReport(
        experiment="mv_check",
        config={"coeffs": v.to_dict()["coeffs"], "n": n, "mcmc": mcmc.to_dict(), "seed": seed},
        per_n=[{"n": n, "mean_re": est, "mean_im": 0.0, "var": float(np.var(per, ddof=1)) if per.size > 1 else 0.0,
                "stderr": se}],
        distances=distances,
        diagnostics=diag,
        verdicts={"mv_within_5pct": abs(est - 1.0) <= MV_REL_TOL},
    )
