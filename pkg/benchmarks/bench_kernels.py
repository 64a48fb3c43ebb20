"""Numba kernels against their numpy fallbacks, plus an end-to-end solve
under each path.

    python benchmarks/bench_kernels.py [--repeat 5]

The end-to-end rows run in subprocesses so that KNASTER_DISABLE_NUMBA takes
effect at import time.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from knaster import _kernels as K
from knaster._accel import HAS_NUMBA


def best_of(fn, repeat):
    fn()  # compile / warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def cases(rng):
    d, n = 3, 200_000
    pts = rng.dirichlet(np.ones(d + 1), size=n)[:, 1:]
    origin, inv = np.zeros(d), np.eye(d)
    lx = rng.dirichlet(np.ones(d + 1), size=n)
    lfx = rng.dirichlet(np.ones(d + 1), size=n)
    masks = rng.integers(0, 2 ** (d + 1), size=(50_000, d + 1)).astype(np.int64)
    r = 96
    comps = K.grid_compositions_numpy(d, r)
    binom = K._binom_table(r + d + 2, d + 2)
    labels = rng.integers(0, d + 1, size=n).astype(np.int64)
    cells = rng.integers(0, n, size=(n, d + 1)).astype(np.int64)
    return [
        ("barycentric_many", lambda: K.barycentric_many_numba(pts, origin, inv),
         lambda: K.barycentric_many_numpy(pts, origin, inv)),
        ("label_masks max-gain", lambda: K.label_masks_numba(lx, lfx, K.MAX_GAIN, 1e-12),
         lambda: K.label_masks_numpy(lx, lfx, K.MAX_GAIN, 1e-12)),
        ("sdr_many", lambda: K.sdr_many_numba(masks), lambda: K.sdr_many_numpy(masks)),
        (f"grid_compositions r={r}", lambda: K.grid_compositions_numba(d, r, len(comps)),
         lambda: K.grid_compositions_numpy(d, r)),
        (f"grid_neighbours r={r}", lambda: K.grid_neighbours_numba(comps, r, binom),
         lambda: K.grid_neighbours_numpy(comps, r, binom)),
        ("count_full_cells", lambda: K.count_full_cells_numba(cells, labels),
         lambda: K.count_full_cells_numpy(cells, labels)),
    ]


SOLVE = ("import time; from knaster import *;"
         "p = builtin('contraction', 3); solve(p, SolverConfig(max_steps=5));"
         "grid_fixed_points(builtin('contraction', 3), 8);"
         "t = time.perf_counter();"
         "solve(p, SolverConfig(max_steps=10000, max_evaluations=104));"
         "grid_fixed_points(builtin('contraction', 3), 160);"
         "print(time.perf_counter() - t)")


def end_to_end(disable):
    env = dict(os.environ, KNASTER_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", SOLVE], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba is not importable; both columns run the same python code")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, fast, slow in cases(rng):
        a = best_of(fast, args.repeat) * 1e3
        b = best_of(slow, args.repeat) * 1e3
        print(f"{name:<26}{a:>12.2f}{b:>12.2f}{b / a:>9.1f}x")
    a, b = end_to_end(False), end_to_end(True)
    print(f"{'solve + grid oracle':<26}{a * 1e3:>12.1f}{b * 1e3:>12.1f}{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
