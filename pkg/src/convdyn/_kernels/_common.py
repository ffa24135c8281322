from __future__ import annotations

from typing import Sequence


def check_prefix_trees(parents: Sequence[int], cuts: Sequence[int]) -> None:
    """Raise ValueError unless every prefix ``parents[:cut]`` is a single rooted tree."""
    n = len(parents)
    prev = 0
    for cut in cuts:
        if cut < prev or cut > n:
            raise ValueError(f"cuts must be nondecreasing within [0, {n}], got {cut}")
        prev = cut
    roots = 0
    max_parent = -1
    ci = 0
    for r in range(n + 1):
        while ci < len(cuts) and cuts[ci] == r:
            if r > 0 and (roots != 1 or max_parent >= r):
                raise ValueError(
                    f"prefix of {r} posts is not a single reply tree "
                    f"({roots} roots, parent rank {max_parent})"
                )
            ci += 1
        if r == n:
            break
        p = parents[r]
        if p < 0:
            roots += 1
        elif p > max_parent:
            max_parent = p
