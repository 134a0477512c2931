"""Command-line interface: ``rmtlimits <command> [options]``.

Every command takes ``--seed``, ``--threads`` and ``--solver`` and writes its
numeric output to ``--out`` together with a run manifest
(``<out>.manifest.json``, or ``manifest.json`` inside an output directory).

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import DEFAULT_CONFIG
from .config_io import (
    RunManifest,
    load_measure,
    load_potential,
    load_solver,
    load_spec,
    spec_to_dict,
    write_csv,
    write_json,
)
from .ensembles import ENTRY_LAWS, MCMCParams, child_rng, sample_spectrum
from .equilibrium import equilibrium_density, solve_support
from .errors import InputError, NumericalError
from .experiments import (
    run_clt_check,
    run_expansion_check,
    run_lindeberg_demo,
    run_mv_check,
    run_variance_sweep,
)
from .free_conv import free_addition_evaluator
from .limit_laws import (
    deformed_semicircle_evaluator,
    laguerre_density,
    mp_atom_mass,
    mp_evaluator,
    semicircle_density,
)
from .measures import Named, cdf, empirical_measure, invert_stieltjes, ks_distance, stieltjes_evaluator

__all__ = ["main", "run", "build_parser", "parse_grid"]


DEFAULT_BINS = 100


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting, so bad input maps to exit code 1."""

    def error(self, message):
        raise InputError(message)


def parse_grid(text):
    """Parse ``lo:hi:step`` into an inclusive grid."""
    try:
        lo, hi, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise InputError(f"grid must be lo:hi:step, got {text!r}") from None
    if not step > 0 or not hi > lo:
        raise InputError("grid needs hi > lo and step > 0")
    k = int(round((hi - lo) / step))
    return lo + step * np.arange(k + 1)


_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def _join_negative_values(argv):
    """Attach values such as ``-3:3:0.1`` or ``-1+2j`` to the preceding flag."""
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE_VALUE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [x for x in text.split(",") if x]


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="trial-level worker threads")
    p.add_argument("--solver", help="solver settings JSON")
    p.add_argument("--out", required=True, help="output path")
    p.add_argument("--report", help="also write a JSON report here")


def build_parser():
    parser = _Parser(prog="rmtlimits", description="Spectral limit laws of random matrices.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("density", help="limiting density on a grid")
    _common(p)
    p.add_argument("--law", required=True, choices=["semicircle", "laguerre", "mp", "deformed-semicircle"])
    p.add_argument("--w", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--beta", type=int, default=2)
    p.add_argument("--c", type=float, default=1.0, help="dimension ratio for mp")
    p.add_argument("--sigma", help="population measure JSON for mp")
    p.add_argument("--f0", help="base measure JSON for deformed-semicircle")
    p.add_argument("--grid", required=True)

    p = sub.add_parser("sample", help="eigenvalues of sampled matrices")
    _common(p)
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int, default=1)

    p = sub.add_parser("compare", help="KS distance and histogram of two laws")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="sample this ensemble for the first law")
    src.add_argument("--a", dest="measure_a", help="first law as measure JSON")
    ref = p.add_mutually_exclusive_group(required=True)
    ref.add_argument("--b", dest="measure_b", help="second law as measure JSON")
    ref.add_argument("--law", choices=["semicircle", "laguerre"])
    p.add_argument("--w", type=float, default=1.0)
    p.add_argument("--a-scale", dest="a_scale", type=float, default=1.0)
    p.add_argument("--beta", type=int, default=2)
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--bins", type=int)
    p.add_argument("--grid", help="histogram edges lo:hi:step")

    p = sub.add_parser("convolve", help="density of the free convolution of two laws")
    _common(p)
    p.add_argument("--a", dest="measure_a", required=True)
    p.add_argument("--b", dest="measure_b", required=True)
    p.add_argument("--grid", required=True)

    p = sub.add_parser("equilibrium", help="equilibrium measure of a potential")
    _common(p)
    p.add_argument("--potential", required=True)
    p.add_argument("--grid")

    p = sub.add_parser("converge", help="variance decay of the resolvent trace")
    _common(p)
    p.add_argument("--spec", required=True)
    p.add_argument("--n-list", required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--z", type=complex)

    p = sub.add_parser("expand", help="first-order 1/n correction")
    _common(p)
    p.add_argument("--law", default="real-gaussian", choices=ENTRY_LAWS)
    p.add_argument("--w", type=float, default=1.0)
    p.add_argument("--n-list", required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--z", type=complex)

    p = sub.add_parser("clt", help="covariance and normality of resolvent-trace fluctuations")
    _common(p)
    p.add_argument("--law", default="real-gaussian", choices=ENTRY_LAWS)
    p.add_argument("--w", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--z1", type=complex)
    p.add_argument("--z2", type=complex)

    p = sub.add_parser("lindeberg", help="semicircle distance for several entry laws")
    _common(p)
    p.add_argument("--laws", default="rademacher,uniform,cauchy")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--w", type=float, default=1.0)

    p = sub.add_parser("mvcheck", help="trace identity for the invariant ensemble")
    _common(p)
    p.add_argument("--potential", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--burn-in", type=int, default=100_000)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--step-scale", type=float)
    return parser


# ---------------------------------------------------------------------------
# commands; each returns (summary line, report dict, output paths)
# ---------------------------------------------------------------------------

def _closed_form(args, grid):
    if args.law == "semicircle":
        return semicircle_density(grid, args.w, args.beta)
    return laguerre_density(grid, args.a, args.beta)


def _cmd_density(args, cfg):
    grid = parse_grid(args.grid)
    info = {}
    if args.law in ("semicircle", "laguerre"):
        dens = _closed_form(args, grid)
    elif args.law == "mp":
        if not args.sigma:
            raise InputError("--law mp needs --sigma")
        sigma = load_measure(args.sigma)
        mass = mp_atom_mass(args.c, sigma)
        atoms = [(0.0, mass)] if mass > 0 else None
        dens = invert_stieltjes(mp_evaluator(args.c, sigma, cfg=cfg), grid, cfg.epsilon_inversion,
                                atoms=atoms, normalize=False)
        info["atom_at_zero"] = mass
    else:
        base = load_measure(args.f0) if args.f0 else None
        f0 = stieltjes_evaluator(base) if base is not None else None
        dens = invert_stieltjes(deformed_semicircle_evaluator(args.w, f0, cfg), grid,
                                cfg.epsilon_inversion, normalize=False)
    write_csv(args.out, ["lambda", "density"], zip(grid.tolist(), np.asarray(dens, dtype=float).tolist()))
    i0 = int(np.argmin(np.abs(grid)))
    summary = f"density {args.law}: {grid.size} points, density({grid[i0]:.6g}) = {float(dens[i0]):.6f}"
    return summary, dict(info, points=int(grid.size)), [args.out]


def _spectra(spec, trials, seed, threads):
    def one(k):
        return sample_spectrum(spec, child_rng(seed, k, "sample"))

    if threads <= 1:
        return [one(k) for k in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(trials)))


def _load_spec_n(args):
    spec = load_spec(args.spec)
    if getattr(args, "n", None):
        from dataclasses import replace

        spec = replace(spec, n=args.n)
    return spec


def _cmd_sample(args, cfg):
    spec = _load_spec_n(args)
    if args.trials < 1:
        raise InputError("--trials must be positive")
    os.makedirs(args.out, exist_ok=True)
    col = "angle" if spec.family == "HaarUnitary" else "eigenvalue"
    paths = []
    for k, eigs in enumerate(_spectra(spec, args.trials, args.seed, args.threads)):
        path = os.path.join(args.out, f"trial_{k:04d}.csv")
        write_csv(path, [col], ([x] for x in eigs.tolist()))
        paths.append(path)
    return f"sample {spec.family} n={spec.n}: {len(paths)} spectra written", {"spec": spec_to_dict(spec)}, paths


def _cmd_compare(args, cfg):
    if args.spec:
        spec = _load_spec_n(args)
        eigs = np.concatenate(_spectra(spec, args.trials, args.seed, args.threads))
        first = empirical_measure(np.sort(eigs), "circle" if spec.family == "HaarUnitary" else "real")
    else:
        first = load_measure(args.measure_a)
    if args.measure_b:
        second = load_measure(args.measure_b)
    elif args.law == "semicircle":
        second = Named("semicircle", {"w": args.w, "beta": args.beta})
    else:
        second = Named("laguerre", {"a": args.a_scale, "beta": args.beta})
    ks = ks_distance(first, second).value
    if args.grid:
        edges = parse_grid(args.grid)
    else:
        bins = args.bins
        lo, hi = _range(first), _range(second)
        edges = np.linspace(min(lo[0], hi[0]), max(lo[1], hi[1]), bins + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    width = np.diff(edges)
    da = np.diff(cdf(first, edges)) / width
    db = np.diff(cdf(second, edges)) / width
    write_csv(args.out, ["lambda", "density_a", "density_b"], zip(mids.tolist(), da.tolist(), db.tolist()))
    return f"compare: KS = {ks:.6g}", {"ks": ks, "bins": int(mids.size)}, [args.out]


def _range(m):
    from .measures import _breakpoints

    pts = _breakpoints(m)
    return float(np.min(pts)), float(np.max(pts))


def _cmd_convolve(args, cfg):
    grid = parse_grid(args.grid)
    fa = stieltjes_evaluator(load_measure(args.measure_a))
    fb = stieltjes_evaluator(load_measure(args.measure_b))
    dens = invert_stieltjes(free_addition_evaluator(fa, fb, cfg), grid, cfg.epsilon_inversion, normalize=False)
    write_csv(args.out, ["lambda", "density"], zip(grid.tolist(), np.asarray(dens).tolist()))
    i0 = int(np.argmin(np.abs(grid)))
    return (f"convolve: {grid.size} points, density({grid[i0]:.6g}) = {float(dens[i0]):.6f}",
            {"points": int(grid.size)}, [args.out])


def _cmd_equilibrium(args, cfg):
    v = load_potential(args.potential)
    sup = solve_support(v, cfg)
    grid = parse_grid(args.grid) if args.grid else np.linspace(sup.a, sup.b, 401)
    dens = equilibrium_density(v, sup, grid)
    write_csv(args.out, ["lambda", "density"], zip(grid.tolist(), np.atleast_1d(dens).tolist()))
    report = {"a": sup.a, "b": sup.b, "residuals": list(sup.residuals)}
    return f"equilibrium: support [{sup.a!r}, {sup.b!r}]", report, [args.out]


def _per_n_csv(path, report):
    rows = [(r["n"], r["mean_re"], r["mean_im"], r["var"], r["stderr"]) for r in report.per_n]
    write_csv(path, ["n", "mean_re", "mean_im", "var", "stderr"], rows)


def _verdict(report):
    return "PASS" if report.passed else "FAIL"


def _cmd_converge(args, cfg):
    spec = load_spec(args.spec)
    rep = run_variance_sweep(spec, _int_list(args.n_list), args.trials, args.z, args.seed, args.threads)
    _per_n_csv(args.out, rep)
    return (f"converge {spec.family}: slope {rep.fit['slope']:.4f} +/- {rep.fit['half_width']:.4f} "
            f"[{_verdict(rep)}]", rep.to_dict(), [args.out])


def _cmd_expand(args, cfg):
    rep = run_expansion_check(args.law, args.w, _int_list(args.n_list), args.trials, args.z, args.seed,
                              args.threads)
    _per_n_csv(args.out, rep)
    return (f"expand {args.law}: rel. error {rep.per_n[-1]['rel_err']:.4f} [{_verdict(rep)}]",
            rep.to_dict(), [args.out])


def _cmd_clt(args, cfg):
    rep = run_clt_check(args.w, args.n, args.trials, args.z1, args.z2, args.seed, args.law, args.threads)
    _per_n_csv(args.out, rep)
    d = rep.diagnostics
    return (f"clt n={args.n}: var {d['var']:.6g} vs c {d['c_var_re']:.6g} [{_verdict(rep)}]",
            rep.to_dict(), [args.out])


def _cmd_lindeberg(args, cfg):
    laws = _str_list(args.laws)
    rep = run_lindeberg_demo(laws, args.n, args.trials, args.seed, args.w, args.threads)
    rows = [(law, rep.distances[law]["ks_mean"], rep.distances[law]["expected"], rep.verdicts[law]) for law in laws]
    write_csv(args.out, ["law", "ks_mean", "expected", "as_expected"], rows)
    parts = ", ".join(f"{law} {rep.distances[law]['ks_mean']:.4f}" for law in laws)
    return f"lindeberg n={args.n}: {parts} [{_verdict(rep)}]", rep.to_dict(), [args.out]


def _cmd_mvcheck(args, cfg):
    v = load_potential(args.potential)
    mcmc = MCMCParams(steps=args.steps, burn_in=args.burn_in, thin=args.thin, step_scale=args.step_scale)
    rep = run_mv_check(v, args.n, mcmc, args.seed)
    _per_n_csv(args.out, rep)
    d = rep.diagnostics
    return (f"mvcheck n={args.n}: estimate {d['estimate']:.5f} +/- {d['stderr']:.5f} [{_verdict(rep)}]",
            rep.to_dict(), [args.out])


_COMMANDS = {
    "density": _cmd_density,
    "sample": _cmd_sample,
    "compare": _cmd_compare,
    "convolve": _cmd_convolve,
    "equilibrium": _cmd_equilibrium,
    "converge": _cmd_converge,
    "expand": _cmd_expand,
    "clt": _cmd_clt,
    "lindeberg": _cmd_lindeberg,
    "mvcheck": _cmd_mvcheck,
}


def _manifest_path(args):
    if args.command == "sample":
        return os.path.join(args.out, "manifest.json")
    return f"{args.out}.manifest.json"


def run(argv=None):
    """Run one command; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_join_negative_values(argv))
        if args.command == "compare" and args.bins is None and not args.grid:
            # default bin count, resolved here so the manifest records it
            total = _load_spec_n(args).n * args.trials if args.spec else DEFAULT_BINS ** 2
            args.bins = math.ceil(math.sqrt(total))
        if args.threads < 1:
            raise InputError("--threads must be positive")
        if args.seed < 0:
            raise InputError("--seed must be nonnegative")
        cfg = load_solver(args.solver) if args.solver else DEFAULT_CONFIG
        config = {k: v for k, v in sorted(vars(args).items()) if k not in ("threads", "out", "report")}
        config["solver_config"] = cfg.to_dict()
        manifest = RunManifest(command=argv, config=config, seed=args.seed)
        summary, report, outputs = _COMMANDS[args.command](args, cfg)
        if args.report:
            write_json(args.report, report)
            outputs.append(args.report)
        manifest.outputs = outputs
        manifest.finish().write(_manifest_path(args))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


def main(argv=None):
    sys.exit(run(argv))
