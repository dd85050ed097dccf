"""Timing comparison between the compiled tridiagonal kernels and the
pure numpy fallback, plus an end-to-end solve with the active backend.

Run from the repository root:

    python3 benchmarks/bench_kernels.py --n-points 2999 --count 64
"""

import argparse
import time

import numpy as np

from specsmooth import kernels
from specsmooth import _kernels_pure as pure
from specsmooth.eigensolver import eigen_lowest
from specsmooth.operators import PotentialSpec, assemble_hamiltonian, build_grid

try:
    from specsmooth import _kernels_cy as compiled
except ImportError:
    compiled = None

ATOL = 1e-12
RTOL = 1e-12


def median_time(fn, repeats):
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return sorted(samples)[len(samples) // 2]


def build_problem(n_points, half_width):
    grid = build_grid(half_width, n_points)
    ham = assemble_hamiltonian(PotentialSpec.harmonic(), grid)
    diag = np.ascontiguousarray(ham.diagonal)
    e = np.full(ham.n - 1, ham.off_diagonal)
    e2 = e * e
    pivmin = 1e-300 * max(1.0, float(e2.max()))
    return ham, diag, e, e2, pivmin


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-points", type=int, default=2999, help="grid size")
    # wide enough that the boundary potential clears 4x the top requested
    # eigenvalue for the default count, so no truncation warning fires
    parser.add_argument("--half-width", type=float, default=24.0)
    parser.add_argument("--count", type=int, default=64, help="eigenvalues to locate")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    ham, diag, e, e2, pivmin = build_problem(args.n_points, args.half_width)
    lower, upper = ham.gershgorin()
    rng = np.random.default_rng(42)
    shifts = np.linspace(lower + 0.5, lower + 0.5 + args.count, args.count)
    rhs = rng.standard_normal((ham.n, args.count))

    backends = [("pure", pure)]
    if compiled is not None:
        backends.append(("compiled", compiled))

    print(f"grid {args.n_points} points, {args.count} eigenvalues, "
          f"median of {args.repeats} runs; active backend: {kernels.backend}")
    print(f"{'kernel':<24}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")

    rows = [
        (
            "sturm_counts",
            lambda mod: mod.sturm_counts(diag, e2, shifts, pivmin),
        ),
        (
            "bisect_eigenvalues",
            lambda mod: mod.bisect_eigenvalues(
                diag, e2, 0, args.count, lower, upper, ATOL, RTOL, pivmin
            ),
        ),
        (
            "solve_shifted_batch",
            lambda mod: mod.solve_shifted_batch(diag, e, shifts, rhs, pivmin),
        ),
    ]
    for label, call in rows:
        times = [median_time(lambda m=mod: call(m), args.repeats) for _, mod in backends]
        ratio = times[0] / times[-1] if len(times) > 1 and times[-1] > 0 else float("nan")
        cells = "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        print(f"{label:<24}{cells}{ratio:>9.1f}x")

    solve = median_time(lambda: eigen_lowest(ham, args.count), max(1, args.repeats // 2))
    print(f"\neigen_lowest({args.count}) end to end: {solve * 1e3:.1f}ms "
          f"({kernels.backend} backend; set SPECSMOOTH_PURE=1 to compare)")


if __name__ == "__main__":
    main()
