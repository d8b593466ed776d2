"""Benchmark the memory-kernel stepper: compiled core vs numpy fallback.

The history sum makes the stepper O(T^2) in the grid length, so this is
the one hot loop of the package.  Both backends run the same scheme on
identical inputs; the table reports wall time and the worst deviation
between the two trajectories.
"""

import argparse
import time

import numpy as np

from collective_mode import (
    build_next_neighbor_model,
    caldeira_leggett_form,
    collective_frequency,
    damping_kernel,
)
from collective_mode import _kernels_py

try:
    from collective_mode import _kernels_cy
except ImportError:
    _kernels_cy = None


def run(kernel, omega0_sq, gamma, h):
    start = time.perf_counter()
    x, _ = kernel.volterra_path(omega0_sq, gamma, h, None, 0.0, 1.0)
    return time.perf_counter() - start, x


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[2000, 5000, 10000, 20000],
                        help="grid lengths to time")
    parser.add_argument("--n-particles", type=int, default=32)
    parser.add_argument("--alpha", type=float, default=0.5)
    args = parser.parse_args()

    model = build_next_neighbor_model(args.n_particles, 1.0, 1.0, args.alpha)
    form = caldeira_leggett_form(model)
    omega0_sq = collective_frequency(form).omega0_sq
    h = 0.02 / form.bath_freqs.max()

    if _kernels_cy is None:
        print("compiled kernel not built; timing the numpy fallback only")
    print(f"{'steps':>8} {'numpy [s]':>12} {'cython [s]':>12} "
          f"{'speedup':>9} {'max |dx|':>12}")
    for size in args.sizes:
        t = np.arange(size) * h
        gamma = damping_kernel(form, t)
        t_py, x_py = run(_kernels_py, omega0_sq, gamma, h)
        if _kernels_cy is not None:
            t_cy, x_cy = run(_kernels_cy, omega0_sq, gamma, h)
            dev = np.abs(x_py - x_cy).max()
            print(f"{size:>8} {t_py:>12.4f} {t_cy:>12.4f} "
                  f"{t_py / t_cy:>8.1f}x {dev:>12.3e}")
        else:
            print(f"{size:>8} {t_py:>12.4f} {'-':>12} {'-':>9} {'-':>12}")


if __name__ == "__main__":
    main()
