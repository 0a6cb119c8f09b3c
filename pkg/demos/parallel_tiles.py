"""Tiled solve with worker threads, compared against the sequential order.

Run: ``python demos/parallel_tiles.py [n] [tile_size]``
"""
import os
import sys
import time

import numpy as np

from robsylv import solve_tiled_robust, sylvester_test_problem
from robsylv.bench import warm_up


def gap(a, b):
    lo = min(a.scale, b.scale)
    x, y = a.rescaled_to(lo), b.rescaled_to(lo)
    return np.abs(x - y).sum(axis=1).max() / np.abs(y).sum(axis=1).max()


def main(n=1024, tile_size=128):
    warm_up()
    A, B, C = sylvester_test_problem(n, n)
    released = []
    t0 = time.perf_counter()
    seq = solve_tiled_robust(A, B, C, tile_size)
    t_seq = time.perf_counter() - t0
    print(f"n={n} tile={tile_size} cpus={os.cpu_count()}  sequential {t_seq:.2f}s")
    for w in (2, 4, 8):
        t0 = time.perf_counter()
        par = solve_tiled_robust(A, B, C, tile_size, workers=w,
                                 on_release=lambda k, l, a, nrm: released.append((k, l)))
        dt = time.perf_counter() - t0
        print(f"  workers={w}: {dt:.2f}s  speedup {t_seq / dt:.2f}  "
              f"distance to sequential {gap(par, seq):.1e}")
    print(f"tile releases observed: {len(released)} "
          f"(first three: {released[:3]})")


if __name__ == "__main__":
    main(*(int(x) for x in sys.argv[1:3]))
