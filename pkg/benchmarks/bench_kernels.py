"""Timing comparison of the compiled kernels against the numpy fallbacks.

Run from the repo root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --dim 3 --trials 256 --n 2000 --m 2048

The numba path is what RANDPOLY_BACKEND=numba (the default when numba
imports) dispatches to; the numpy path is the fallback. Results are checked
for agreement before any timing is reported.
"""

import argparse
import statistics
import time

import numpy as np

from randpoly import kernels


def time_call(fn, *args, repeats: int) -> float:
    fn(*args)  # warmup; first numba call includes compilation
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def random_unit(rng, shape):
    v = rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def main() -> int:
    ap = argparse.ArgumentParser(description="kernel backend timings")
    ap.add_argument("--dim", type=int, default=2, choices=(2, 3))
    ap.add_argument("--trials", type=int, default=512)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--m", type=int, default=1024)
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    if kernels.BACKEND != "numba":
        print("backend is numpy (numba missing or RANDPOLY_BACKEND=numpy); "
              "nothing to compare")
        return 0
    kernels.set_threads(args.threads)

    rng = np.random.default_rng(0)
    pts = rng.normal(size=(args.trials, args.n, args.dim))
    normals = random_unit(rng, (args.trials, args.n, args.dim))
    offsets = rng.uniform(0.5, 2.0, size=(args.trials, args.n))
    theta = (np.arange(args.m) + 0.5) * (2.0 * np.pi / args.m)
    if args.dim == 2:
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    else:
        # crude but adequate node cloud for timing purposes
        nodes = random_unit(rng, (args.m, args.dim))

    pairs = [
        ("hull_support", kernels.hull_support, kernels.hull_support_numpy,
         (pts, nodes)),
        ("halfspace_radial", kernels.halfspace_radial,
         kernels.halfspace_radial_numpy, (normals, offsets, nodes)),
    ]
    print(f"dim={args.dim} trials={args.trials} n={args.n} m={args.m} "
          f"repeats={args.repeats}")
    print(f"{'kernel':18s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, fast, ref, call_args in pairs:
        a = fast(*call_args)
        b = ref(*call_args)
        finite = np.isfinite(b)
        if not np.array_equal(np.isfinite(a), finite):
            raise SystemExit(f"{name}: backends disagree on finiteness")
        err = float(np.max(np.abs(a[finite] - b[finite])))
        if err > 1e-10:
            raise SystemExit(f"{name}: backends disagree by {err:.3e}")
        t_fast = time_call(fast, *call_args, repeats=args.repeats)
        t_ref = time_call(ref, *call_args, repeats=args.repeats)
        print(f"{name:18s} {t_fast * 1e3:8.1f}ms {t_ref * 1e3:8.1f}ms "
              f"{t_ref / t_fast:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
