"""Compare the compiled and pure-Python kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--trees 200] [--posts 500] [--repeat 5]
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from convdyn import _kernels
from convdyn.synth import gen_parents, gen_timestamps


def _workloads(n_trees: int, n_posts: int, seed: int):
    rng = np.random.default_rng(seed)
    trees = [gen_parents(n_posts, "uniform_attach", rng) for _ in range(n_trees)]
    cuts = list(range(5, n_posts, 5)) + [n_posts]
    curves = [gen_timestamps(n_posts, 32.5, rng) for _ in range(n_trees)]
    return trees, cuts, curves


def _bench(backend, trees, cuts, curves, grid_size: int, repeat: int) -> dict[str, float]:
    def wiener():
        for parents in trees:
            backend.wiener_prefix_series(parents, cuts)

    def curve():
        mean = np.zeros(grid_size + 1)
        m2 = np.zeros(grid_size + 1)
        for k, times in enumerate(curves, start=1):
            backend.accumulate_step_curve(times, grid_size, mean, m2, k)

    return {
        "wiener_prefix_series": min(timeit.repeat(wiener, number=1, repeat=repeat)),
        "accumulate_step_curve": min(timeit.repeat(curve, number=1, repeat=repeat)),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trees", type=int, default=200)
    parser.add_argument("--posts", type=int, default=500)
    parser.add_argument("--grid", type=int, default=100_000, help="curve grid size (1 / resolution)")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = _kernels.available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; only the Python backend will be timed", file=sys.stderr)
    trees, cuts, curves = _workloads(args.trees, args.posts, args.seed)
    results = {
        name: _bench(_kernels.get_backend(name), trees, cuts, curves, args.grid, args.repeat)
        for name in backends
    }
    print(f"{'kernel':<24}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for kernel in ("wiener_prefix_series", "accumulate_step_curve"):
        row = [results[name][kernel] for name in backends]
        speedup = (
            f"{results['python'][kernel] / results['compiled'][kernel]:>9.1f}x"
            if len(backends) == 2 else f"{'-':>10}"
        )
        print(f"{kernel:<24}" + "".join(f"{t:>11.4f}s" for t in row) + speedup)
    return 0


if __name__ == "__main__":
    sys.exit(main())
