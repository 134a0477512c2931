"""Compare the numba kernels with their pure-numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once to trigger compilation, then timed ``--repeat``
times on identical inputs with both backends. The outputs are checked for
agreement before timings are reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from rmtlimits._accel import HAS_NUMBA
from rmtlimits.kernels import loggas_sweeps, mp_fixed_point


def _best(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_loggas(repeat, n=64, sweeps=200):
    rng = np.random.default_rng(0)
    coeffs = np.array([0.0, 0.0, 0.0, 0.0, 0.25])
    steps = rng.normal(scale=0.1 / np.sqrt(n), size=(sweeps, n))
    log_u = np.log(rng.random((sweeps, n)))
    x0 = np.linspace(-1.0, 1.0, n)

    def run(use_numba):
        x = x0.copy()
        acc = loggas_sweeps(x, coeffs, float(n), steps, log_u, use_numba=use_numba)
        return x, acc

    xa, aa = run(True)
    xb, ab = run(False)
    agree = aa == ab and np.allclose(xa, xb, rtol=0, atol=1e-12)
    return (f"log-gas sweeps (n={n}, {sweeps} sweeps)", _best(lambda: run(True), repeat),
            _best(lambda: run(False), repeat), agree)


def bench_mp(repeat, points=2000):
    z = np.linspace(0.01, 6.0, points) + 1e-2j
    f0 = -1.0 / z
    t = np.array([1.0, 3.0])
    p = np.array([0.5, 0.5])

    def run(use_numba):
        return mp_fixed_point(z, f0, 0.5, t, p, 0.5, 1e-12, 10_000, use_numba=use_numba)

    fa, fb = run(True)[0], run(False)[0]
    agree = np.allclose(fa, fb, rtol=1e-9, atol=1e-12)
    return (f"Marchenko-Pastur fixed point ({points} points)", _best(lambda: run(True), repeat),
            _best(lambda: run(False), repeat), agree)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not HAS_NUMBA:
        print("numba is unavailable or disabled; only the numpy backend can be timed")
    print(f"{'kernel':48s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}  agree")
    for name, t_nb, t_py, agree in (bench_loggas(args.repeat), bench_mp(args.repeat)):
        print(f"{name:48s} {t_nb:10.4f} {t_py:10.4f} {t_py / t_nb:8.1f}  {agree}")


if __name__ == "__main__":
    main()
