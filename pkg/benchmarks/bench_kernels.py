"""Time the numba and numpy implementations of the batch kernels.

    python benchmarks/bench_kernels.py --n 200000 --repeat 3

Both backends are called through ``kernels.IMPLEMENTATIONS`` on the same
inputs, and their outputs are checked for equality before timing is reported.
"""

import argparse
import time

import numpy as np

from bictx import _accel
from bictx.kernels import IMPLEMENTATIONS
from bictx.oracle import random_behaviors


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="behaviors for the classify kernel")
    ap.add_argument("--grid-n", type=int, default=5_000, help="behaviors for the grid kernel")
    ap.add_argument("--grid-points", type=int, default=10001)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    _accel.set_threads(args.threads)

    m = random_behaviors(args.n, 0)
    g = random_behaviors(args.grid_n, 1)
    cases = [
        ("classify", (m, 1e-12), args.n),
        ("grid", (g, args.grid_points, 1e-9), args.grid_n),
    ]
    print(f"{'kernel':<10}{'n':>10}{'numpy s':>12}{'numba s':>12}{'speedup':>10}  equal")
    for name, call_args, n in cases:
        impl = IMPLEMENTATIONS[name]
        t = time.perf_counter()
        ref = impl["numba"](*call_args)  # includes compilation on a cold cache
        compile_s = time.perf_counter() - t
        equal = same(impl["numpy"](*call_args), ref)
        t_np = best_of(lambda: impl["numpy"](*call_args), args.repeat)
        t_nb = best_of(lambda: impl["numba"](*call_args), args.repeat)
        print(f"{name:<10}{n:>10}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x  {equal}"
              f"  (first numba call {compile_s:.2f}s)")


if __name__ == "__main__":
    main()
