#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel paths on realistic edit sizes.

Run: python3 benchmarks/bench_kernels.py [--size 64] [--repeat 50]
"""

import argparse
import time

import numpy as np

from attnedit import kernels


def bench(fn, args, repeat):
    fn(*args)  # warm-up (includes JIT compile for the numba path)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--channels", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()

    h = w = args.size
    hw = h * w
    rng = np.random.default_rng(0)
    values2d = rng.normal(size=(args.channels, hw))
    dxf = rng.integers(-4, 5, size=hw)
    dyf = rng.integers(-4, 5, size=hw)
    wf = rng.random(hw)

    n_blanks = hw // 8
    rows = rng.random((n_blanks, hw))
    rows /= rows.sum(axis=1, keepdims=True)
    blank_cols = rng.choice(hw, size=n_blanks, replace=False).astype(np.int64)

    print(f"grid {args.channels}x{h}x{w}, {n_blanks} blanks, "
          f"{args.repeat} reps (numba available: {kernels.HAVE_NUMBA})")
    print(f"{'kernel':<16} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}")

    t_np = bench(kernels._scatter_warp_numpy, (values2d, dxf, dyf, wf, h, w), args.repeat)
    if kernels.HAVE_NUMBA:
        t_nb = bench(kernels._scatter_warp_jit, (values2d, dxf, dyf, wf, h, w), args.repeat)
        print(f"{'scatter_warp':<16} {t_np*1e3:>12.3f} {t_nb*1e3:>12.3f} {t_np/t_nb:>8.1f}x")
    else:
        print(f"{'scatter_warp':<16} {t_np*1e3:>12.3f} {'-':>12} {'-':>9}")

    t_np = bench(kernels._weighted_fill_numpy, (values2d, rows, blank_cols), args.repeat)
    if kernels.HAVE_NUMBA:
        t_nb = bench(kernels._weighted_fill_jit, (values2d, rows, blank_cols), args.repeat)
        print(f"{'weighted_fill':<16} {t_np*1e3:>12.3f} {t_nb*1e3:>12.3f} {t_np/t_nb:>8.1f}x")
    else:
        print(f"{'weighted_fill':<16} {t_np*1e3:>12.3f} {'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
