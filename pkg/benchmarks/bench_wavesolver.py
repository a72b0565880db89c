"""Time the diamond marching kernel with both backends.

    python3 benchmarks/bench_wavesolver.py [--h 0.05] [--repeat 3]
"""

import argparse
import time

import numpy as np

from nullinf.wavesolver import ForcingSpec, grid_for
from nullinf.wavesolver.kernels import HAVE_NUMBA, march
from nullinf.wavesolver.solver import cell_potential, cell_sources


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--ell", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    f = ForcingSpec(1.0, (0.0, 1.0), (2.5, 3.0), ell=args.ell)
    grid = grid_for(f, h=args.h, u1=2.0)
    k = 2.0
    src = cell_sources(grid, f, k)
    pot = cell_potential(grid, k, 3, args.ell)
    print(f"grid {grid.shape[0]} x {grid.shape[1]}")

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if HAVE_NUMBA:
        march(src[:4, :4], pot[:4, :4], "numba")  # compile outside the timing
    results = {}
    for b in backends:
        t, w = best_of(lambda: march(src, pot, b), args.repeat)
        results[b] = w
        print(f"{b:6s} {t * 1e3:10.2f} ms")
    if len(results) == 2:
        print(f"max |numba - numpy| = {np.max(np.abs(results['numba'] - results['numpy'])):.3e}")


if __name__ == "__main__":
    main()
