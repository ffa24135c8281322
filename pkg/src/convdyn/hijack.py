"""Hashtag hijacking: tracking hashtag degree over snapshots.

A conversation is eligible when its seed post carries at least one hashtag
and some hashtag is used by at least ``min_use`` posts. Per snapshot, ``I``
is the highest degree among the seed's hashtags and ``M`` the highest among
all others. ``M > I`` at some snapshot is an overtake; the conversation is
a hijacking if ``M > I`` holds at the final snapshot, a failed hijacking if
an overtake happened but the initial hashtags lead (ties included) at the
end, and otherwise not a hijacking.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .hin import EdgeType
from .ingest import Conversation
from .sampler import SamplingPolicy, SnapshotSequence, sample
from .structure import completion_bins

__all__ = [
    "HIJACKING",
    "FAILED_HIJACKING",
    "NO_HIJACKING",
    "INELIGIBLE",
    "SCENARIOS",
    "HashtagSeries",
    "HijackReport",
    "TakeoverHistogram",
    "initial_hashtags",
    "hashtag_usage",
    "eligible",
    "degree_series",
    "classify",
    "classify_series",
    "takeover_histogram",
    "HISTOGRAM_ROWS",
]

HIJACKING = "hijacking"
FAILED_HIJACKING = "failed_hijacking"
NO_HIJACKING = "no_hijacking"
INELIGIBLE = "ineligible"
SCENARIOS = (HIJACKING, FAILED_HIJACKING, NO_HIJACKING, INELIGIBLE)

HISTOGRAM_ROWS = ("hijack_first_overtake", "failed_first_overtake", "failed_last_retake")


@dataclass(frozen=True)
class HashtagSeries:
    hashtag: str
    degrees: tuple[int, ...]


def initial_hashtags(conv: Conversation) -> frozenset[str]:
    return frozenset(conv.graph.successors(conv.seed_id, EdgeType.USAGE))


def hashtag_usage(conv: Conversation) -> dict[str, int]:
    """Number of distinct posts using each hashtag in the full conversation."""
    return {
        tag: conv.graph.degree(tag, EdgeType.USAGE, "in") for tag in conv.hashtags()
    }


def eligible(conv: Conversation, min_use: int = 5) -> bool:
    if not initial_hashtags(conv):
        return False
    return any(count >= min_use for count in hashtag_usage(conv).values())


def degree_series(conv: Conversation, seq: SnapshotSequence) -> list[HashtagSeries]:
    """Usage in-degree of every hashtag at every snapshot, sorted by hashtag."""
    if seq.conversation is not conv:
        raise ValueError("snapshot sequence belongs to a different conversation")
    n_snap = len(seq)
    # Snapshot index at which each post (by rank) first appears.
    first_snap = np.searchsorted(np.asarray(seq.cuts), np.arange(conv.n_posts), side="right")
    counts: dict[str, np.ndarray] = {}
    for rank, tags in enumerate(conv.post_hashtags):
        s = int(first_snap[rank])
        for tag in tags:
            arr = counts.get(tag)
            if arr is None:
                arr = counts[tag] = np.zeros(n_snap, dtype=np.int64)
            arr[s] += 1
    return [
        HashtagSeries(tag, tuple(int(v) for v in np.cumsum(counts[tag])))
        for tag in sorted(counts)
    ]


@dataclass(frozen=True)
class HijackReport:
    conversation_id: str
    eligible: bool
    scenario: str
    initial_hashtags: tuple[str, ...]
    first_overtake: float | None = None
    last_retake: float | None = None
    final_dominant: str | None = None
    first_overtake_snapshot: int | None = None
    last_retake_snapshot: int | None = None
    n_snapshots: int = 0

    def as_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "eligible": self.eligible,
            "scenario": self.scenario,
            "initial_hashtags": list(self.initial_hashtags),
            "first_overtake": self.first_overtake,
            "last_retake": self.last_retake,
            "final_dominant": self.final_dominant,
            "first_overtake_snapshot": self.first_overtake_snapshot,
            "last_retake_snapshot": self.last_retake_snapshot,
            "n_snapshots": self.n_snapshots,
        }


def _final_dominant(series: Mapping[str, Sequence[float]], initial: frozenset[str], hijacked: bool) -> str | None:
    pool = [t for t in series if (t not in initial) == hijacked]
    if not pool:
        pool = list(series)
    if not pool:
        return None
    return min(pool, key=lambda t: (-series[t][-1], t))


def classify_series(
    series: Mapping[str, Sequence[float]],
    initial: Iterable[str],
    completion_rates: Sequence[float],
    conversation_id: str = "",
) -> HijackReport:
    """Classify an eligible conversation from per-hashtag degree series.

    Only within-snapshot comparisons are made, so any positive rescaling of
    a snapshot's degrees leaves the result unchanged.
    """
    initial = frozenset(initial)
    n_snap = len(completion_rates)
    inc = np.zeros(n_snap)
    other = np.zeros(n_snap)
    for tag, values in series.items():
        values = np.asarray(values, dtype=np.float64)
        if len(values) != n_snap:
            raise ValueError(f"series for {tag!r} has {len(values)} values, expected {n_snap}")
        if tag in initial:
            np.maximum(inc, values, out=inc)
        else:
            np.maximum(other, values, out=other)
    ahead = other > inc
    tags = tuple(sorted(initial))
    if not ahead.any():
        return HijackReport(
            conversation_id, True, NO_HIJACKING, tags,
            final_dominant=_final_dominant(series, initial, False), n_snapshots=n_snap,
        )
    first = int(np.argmax(ahead))
    if ahead[-1]:
        return HijackReport(
            conversation_id, True, HIJACKING, tags,
            first_overtake=float(completion_rates[first]),
            final_dominant=_final_dominant(series, initial, True),
            first_overtake_snapshot=first, n_snapshots=n_snap,
        )
    retakes = [t for t in range(1, n_snap) if ahead[t - 1] and not ahead[t]]
    last = retakes[-1]
    return HijackReport(
        conversation_id, True, FAILED_HIJACKING, tags,
        first_overtake=float(completion_rates[first]),
        last_retake=float(completion_rates[last]),
        final_dominant=_final_dominant(series, initial, False),
        first_overtake_snapshot=first, last_retake_snapshot=last, n_snapshots=n_snap,
    )


def classify(
    conv: Conversation, seq: SnapshotSequence | None = None, min_use: int = 5
) -> HijackReport:
    """Hijacking scenario of ``conv`` over its snapshots (default: 5 posts each)."""
    initial = initial_hashtags(conv)
    if not eligible(conv, min_use):
        return HijackReport(conv.conversation_id, False, INELIGIBLE, tuple(sorted(initial)))
    if seq is None:
        seq = sample(conv, SamplingPolicy.volume())
    series = {s.hashtag: s.degrees for s in degree_series(conv, seq)}
    return classify_series(series, initial, seq.completion_rates, conv.conversation_id)


@dataclass(frozen=True, eq=False)
class TakeoverHistogram:
    bins: int
    edges: np.ndarray
    rows: dict[str, np.ndarray]
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def empty_rows(self) -> list[str]:
        return [name for name in HISTOGRAM_ROWS if self.counts.get(name, 0) == 0]


def takeover_histogram(reports: Iterable[HijackReport], bins: int = 20) -> TakeoverHistogram:
    """Per-row normalized occurrence of takeover timings over completion-rate bins.

    Bins are right-closed, ``(lo, hi]``, with the first bin also holding 0.
    """
    if not isinstance(bins, int) or bins < 1:
        raise ValueError(f"bins must be a positive integer, got {bins!r}")
    events: dict[str, list[float]] = {name: [] for name in HISTOGRAM_ROWS}
    for rep in reports:
        if rep.scenario == HIJACKING:
            events["hijack_first_overtake"].append(rep.first_overtake)
        elif rep.scenario == FAILED_HIJACKING:
            events["failed_first_overtake"].append(rep.first_overtake)
            events["failed_last_retake"].append(rep.last_retake)
    rows = {}
    counts = {}
    for name, rates in events.items():
        hist = np.zeros(bins, dtype=np.float64)
        for b, c in Counter(completion_bins(rates, bins)).items():
            hist[b] = c
        counts[name] = len(rates)
        if rates:
            hist /= len(rates)
        rows[name] = hist
    edges = np.arange(bins + 1, dtype=np.float64) / bins
    return TakeoverHistogram(bins, edges, rows, counts)
