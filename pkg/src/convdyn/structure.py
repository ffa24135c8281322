"""Static and temporal Wiener index of reply trees.

Distances follow reply edges (reply -> parent), so an ordered pair of posts
contributes only when the second is an ancestor of the first. The index is
the distance sum divided by ``|V| * (|V| - 1)``. A lone seed has index 0 and
a seed with a single reply has index 0.5.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .hin import EdgeType, NodeType, TypedGraph
from .sampler import SnapshotSequence

__all__ = [
    "NotATreeError",
    "WienerSeries",
    "wiener_index",
    "temporal_wiener",
    "wiener_boxplot",
    "BoxStats",
]


class NotATreeError(ValueError):
    pass


def _reply_tree_depths(graph: TypedGraph) -> list[int]:
    posts = graph.nodes(NodeType.POST)
    if not posts:
        raise ValueError("Wiener index of an empty graph is undefined")
    roots = [p for p in posts if graph.parent(p) is None]
    if len(roots) != 1:
        raise NotATreeError(f"reply graph has {len(roots)} roots, expected 1")
    depth = {roots[0]: 0}
    queue = deque(roots)
    while queue:
        cur = queue.popleft()
        for child in graph.predecessors(cur, EdgeType.REPLY):
            depth[child] = depth[cur] + 1
            queue.append(child)
    if len(depth) != len(posts):
        # Out-degree <= 1 with a single root: unreached posts sit on a cycle.
        raise NotATreeError("reply graph is not connected to its root (cycle present)")
    return [depth[p] for p in posts]


def wiener_index(graph: TypedGraph) -> float:
    """Directed Wiener index of the reply tree among the post nodes of ``graph``.

    Hashtag nodes and usage edges are ignored.
    """
    depths = _reply_tree_depths(graph)
    n = len(depths)
    if n == 1:
        return 0.0
    total = sum(d * (d + 1) // 2 for d in depths)
    return total / (n * (n - 1))


@dataclass(frozen=True)
class WienerSeries:
    conversation_id: str
    completion_rates: tuple[float, ...]
    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(zip(self.completion_rates, self.values))


def temporal_wiener(seq: SnapshotSequence) -> WienerSeries:
    """Wiener index of each snapshot's reply tree, paired with its completion rate."""
    if len(seq) == 0:
        raise ValueError("empty snapshot sequence")
    conv = seq.conversation
    try:
        values = _kernels.wiener_prefix_series(conv.parent_ranks, seq.cuts)
    except ValueError as exc:
        raise NotATreeError(f"conversation {conv.conversation_id!r}: {exc}") from None
    return WienerSeries(conv.conversation_id, seq.completion_rates, tuple(float(v) for v in values))


@dataclass(frozen=True)
class BoxStats:
    bin_lo: float
    bin_hi: float
    n: int
    mean: float
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    minimum: float
    maximum: float


def _bin_index(rate: float, bins: int) -> int:
    # Right-closed bins (lo, hi]; a small slack absorbs float noise at edges.
    idx = int(np.ceil(rate * bins - 1e-9)) - 1
    return min(max(idx, 0), bins - 1)


def wiener_boxplot(series: Iterable[WienerSeries], bins: int = 20) -> list[BoxStats]:
    """Box-plot statistics per completion-rate bin.

    Within each bin a conversation first contributes the mean of its
    snapshot values; quartiles are then taken across conversations.
    Whiskers extend to the furthest value within 1.5 IQR of the box.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    per_bin: dict[int, list[float]] = defaultdict(list)
    for s in series:
        acc: dict[int, list[float]] = defaultdict(list)
        for rate, value in s:
            acc[_bin_index(rate, bins)].append(value)
        for b, vals in acc.items():
            per_bin[b].append(float(np.mean(vals)))
    out = []
    for b in range(bins):
        vals = np.sort(np.asarray(per_bin.get(b, []), dtype=np.float64))
        lo, hi = b / bins, (b + 1) / bins
        if vals.size == 0:
            nan = float("nan")
            out.append(BoxStats(lo, hi, 0, nan, nan, nan, nan, nan, nan, nan, nan))
            continue
        q1, med, q3 = (float(v) for v in np.percentile(vals, [25, 50, 75]))
        iqr = q3 - q1
        inside = vals[(vals >= q1 - 1.5 * iqr) & (vals <= q3 + 1.5 * iqr)]
        out.append(
            BoxStats(
                lo, hi, int(vals.size), float(vals.mean()), q1, med, q3,
                float(inside.min()), float(inside.max()),
                float(vals[0]), float(vals[-1]),
            )
        )
    return out


def completion_bins(rates: Sequence[float], bins: int) -> list[int]:
    return [_bin_index(r, bins) for r in rates]
