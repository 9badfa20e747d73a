"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]

The first numba call includes JIT compilation (or a cache load); it is timed
separately and excluded from the steady-state numbers. Results of the two
backends are compared as a sanity check.
"""

import argparse
import time

import numpy as np

from expsel import _kernels, pathsum
from expsel.acceptance import random_lattice
from expsel.hilbert import random_density


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    cases = [
        ("propagator 10^4 paths", (10, 10, 10, 10), "single"),
        ("propagator 10^6 paths", (10, 10, 10, 10, 10, 10), "single"),
        ("double sum 1.7e5 pairs", (8, 7, 8), "double"),
        ("double sum 9.8e6 pairs", (6, 6, 6, 6, 2), "double"),
    ]
    start = time.perf_counter()
    warm = random_lattice(rng, (2, 2, 2))
    pathsum.propagator(warm, backend="numba")
    pathsum.double_path_functional(warm, pathsum.BoundaryCondition(np.eye(2) / 2), backend="numba")
    print(f"numba warm-up (compile or cache load): {time.perf_counter() - start:.2f} s\n")

    print(f"{'case':<26}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>13}")
    for name, sizes, kind in cases:
        model = random_lattice(rng, sizes)
        if kind == "single":
            run = lambda b: pathsum.propagator(model, backend=b)  # noqa: E731
        else:
            bc = pathsum.BoundaryCondition(random_density(sizes[0], rng))
            run = lambda b: pathsum.double_path_functional(model, bc, backend=b)  # noqa: E731
        t_np, r_np = best_of(lambda: run("numpy"), args.repeat)
        t_nb, r_nb = best_of(lambda: run("numba"), args.repeat)
        diff = float(np.max(np.abs(np.asarray(r_np) - np.asarray(r_nb))))
        print(f"{name:<26}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>13.1e}")
    print(f"\nenv-selected backend: {_kernels.backend().name}")


if __name__ == "__main__":
    main()
