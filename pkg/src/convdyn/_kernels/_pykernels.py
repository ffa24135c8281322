"""Pure-Python kernels, used when the compiled extension is unavailable."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ._common import check_prefix_trees

__all__ = ["tree_depths", "wiener_prefix_series", "accumulate_step_curve"]


def tree_depths(parents: Sequence[int]) -> list[int]:
    """Depth of every node of a rooted forest given parent indices (-1 = root)."""
    n = len(parents)
    depth = [-1] * n
    for start in range(n):
        if depth[start] >= 0:
            continue
        chain = []
        node = start
        while node >= 0 and depth[node] < 0:
            chain.append(node)
            if len(chain) > n:
                raise ValueError("parent array contains a cycle")
            node = parents[node]
            if node >= n:
                raise ValueError(f"parent index {node} out of range")
        d = -1 if node < 0 else depth[node]
        for node in reversed(chain):
            d += 1
            depth[node] = d
    return depth


def wiener_prefix_series(parents: Sequence[int], cuts: Sequence[int]) -> list[float]:
    """Directed Wiener index of every prefix tree ``parents[:cut]``.

    In a reply tree a post reaches exactly its ancestors, at distances
    1..depth, so the ordered-pair distance sum is sum(d * (d + 1) / 2).
    """
    parents = [int(p) for p in parents]
    cuts = [int(c) for c in cuts]
    check_prefix_trees(parents, cuts)
    depth = tree_depths(parents)
    out = []
    total = 0
    done = 0
    for cut in cuts:
        for r in range(done, cut):
            d = depth[r]
            total += d * (d + 1) // 2
        done = cut
        out.append(0.0 if cut < 2 else total / (cut * (cut - 1)))
    return out


def accumulate_step_curve(
    times: np.ndarray, grid_size: int, mean: np.ndarray, m2: np.ndarray, k: int
) -> None:
    """Fold one conversation's step curve into running mean/M2 arrays in place.

    The curve at grid point ``g / grid_size`` is the fraction of ``times``
    that are <= that point. ``k`` is the sample count including this one.
    """
    times = np.asarray(times, dtype=np.float64)
    grid = np.arange(grid_size + 1, dtype=np.float64) / grid_size
    x = np.searchsorted(times, grid, side="right") / float(len(times))
    delta = x - mean
    mean += delta / k
    m2 += delta * (x - mean)
