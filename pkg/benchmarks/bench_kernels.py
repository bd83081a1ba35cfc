#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both paths run in one process; the module-level switch in
``supernorm.kernels`` is flipped between timings.  The first numba call is a
warm-up so compilation is not counted.
"""
import argparse
import time

import numpy as np

from supernorm import kernels
from supernorm.orlicz import orlicz_pipeline, power


def _orlicz_case(rows=400, n=64):
    G = orlicz_pipeline(power(2), n).smoothed
    X = np.random.default_rng(0).random((rows, n))
    s_lo, s_hi = G.brackets(n)
    terms = G.terms()
    return lambda: kernels.orlicz_rows(X, *terms, s_lo, s_hi)


def _loads_case(T=12, n=3):
    sizes = np.random.default_rng(1).random((T, n))
    return lambda: kernels.enumerate_loads(sizes)


def _paths_case(paths=100_000, T=32, n=8):
    rng = np.random.default_rng(2)
    xi = (rng.random((paths, T)) < 0.5).astype(float)
    xibar = (rng.random((paths, T)) < 0.5).astype(float)
    return lambda: kernels.argmax_paths(xi, xibar, n)


CASES = {
    "orlicz_rows (400 x 64, smoothed t^2)": _orlicz_case,
    "enumerate_loads (3^12 assignments)": _loads_case,
    "argmax_paths (1e5 paths, T=32, n=8)": _paths_case,
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':40s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for name, make in CASES.items():
        fn = make()
        kernels.disable_jit()
        ref = fn()
        t_np = best_of(fn, args.repeat)
        kernels.enable_jit()
        out = fn()  # compile
        t_nb = best_of(fn, args.repeat)
        if isinstance(ref, tuple):
            same = all(np.allclose(r, o, rtol=1e-9) for r, o in zip(ref, out))
        else:
            same = np.allclose(ref, out, rtol=1e-9)
        flag = "" if same else "  MISMATCH"
        print(f"{name:40s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:7.1f}x{flag}")


if __name__ == "__main__":
    main()
