#!/usr/bin/env python3
"""Timing comparison of the two kernel backends.

Run from anywhere once the package is installed:

    python3 benchmarks/bench_kernels.py --reps 200

Per-kernel rows call both implementations directly in one process.  The
end-to-end row re-executes this script with FORUMPULSE_NO_NUMBA=1 to time
the numpy fallback, because the backend is bound at import time.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from forumpulse import _kernels
from forumpulse.forecast import grid_search

KERNELS = ("residuals", "negloglik", "grad_negloglik")


def ar1(n: int, seed: int, alpha: float = 0.55) -> np.ndarray:
    rng = np.random.default_rng(seed)
    e = rng.normal(size=n)
    out = np.empty(n)
    prev = 0.0
    for t in range(n):
        prev = alpha * prev + e[t]
        out[t] = prev
    return out


def kernel_args(n: int):
    y = ar1(n, 3)
    x = np.random.default_rng(4).normal(size=n)
    return y, 0.02, np.array([0.4, 0.15]), np.array([0.3, 0.1]), 0.25, x


def best_of(fn, reps: int) -> float:
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        if dt < best:
            best = dt
    return best


def time_backend(fns, case, reps):
    y, mu, ar, ma, gamma, x = case
    return {
        "residuals": best_of(lambda: fns[0](y, mu, ar, ma, gamma, x), reps),
        "negloglik": best_of(lambda: fns[1](y, mu, ar, ma, gamma, x), reps),
        "grad_negloglik": best_of(lambda: fns[2](y, mu, ar, ma, gamma, x, True, 1e-6), reps),
    }


def grid_seconds() -> float:
    y = np.cumsum(ar1(400, 11, alpha=0.6))
    t0 = time.perf_counter()
    grid_search(y, p_max=3, d_max=1, q_max=3)
    return time.perf_counter() - t0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="compare the compiled and numpy kernel backends")
    ap.add_argument("--reps", type=int, default=200, help="calls per kernel, best time wins")
    ap.add_argument("--length", type=int, default=2000, help="series length for the kernel rows")
    ap.add_argument("--json", action="store_true", help="machine-readable output (subprocess leg)")
    args = ap.parse_args(argv)

    _kernels.warmup()
    case = kernel_args(args.length)

    numpy_fns = (
        _kernels.residuals_numpy,
        _kernels.negloglik_numpy,
        _kernels.grad_negloglik_numpy,
    )
    numpy_times = time_backend(numpy_fns, case, args.reps)
    numba_times = None
    if _kernels.USE_NUMBA:
        numba_fns = (
            _kernels.residuals_numba,
            _kernels.negloglik_numba,
            _kernels.grad_negloglik_numba,
        )
        numba_times = time_backend(numba_fns, case, args.reps)
    grid_s = grid_seconds()

    if args.json:
        print(
            json.dumps(
                {
                    "backend": _kernels.active_backend(),
                    "numpy": numpy_times,
                    "numba": numba_times,
                    "grid_seconds": grid_s,
                }
            )
        )
        return 0

    print(f"series length {args.length}, best of {args.reps} calls")
    print(f"{'kernel':<16}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name in KERNELS:
        a = numpy_times[name] * 1e6
        if numba_times is not None:
            b = numba_times[name] * 1e6
            print(f"{name:<16}{a:>10.1f}us{b:>10.1f}us{a / b:>9.1f}x")
        else:
            print(f"{name:<16}{a:>10.1f}us{'-':>12}{'-':>10}")

    print()
    print(
        f"order grid (p<=3, d<=1, q<=3, n=400), {_kernels.active_backend()} backend: {grid_s:.2f}s"
    )
    if _kernels.USE_NUMBA:
        env = dict(os.environ, FORUMPULSE_NO_NUMBA="1")
        run = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--json", "--reps", "1",
             "--length", str(args.length)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        info = json.loads(run.stdout.strip().splitlines()[-1])
        ratio = info["grid_seconds"] / grid_s
        print(f"order grid, numpy fallback (subprocess): {info['grid_seconds']:.2f}s ({ratio:.1f}x slower)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
