"""Cumulative temporal snapshots of a conversation.

Two policies are supported. ``fixed_time`` cuts the lifetime into windows of
equal duration. ``fixed_volume`` adds a constant number of posts per
snapshot, which keeps snapshot growth even when posting activity saturates
early.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Literal

from .hin import TypedGraph, induced_subgraph
from .ingest import Conversation, to_millis

__all__ = [
    "SamplingPolicy",
    "SnapshotSequence",
    "sample",
    "snapshot_graph",
    "parse_policy",
    "parse_duration",
]


@dataclass(frozen=True)
class SamplingPolicy:
    kind: Literal["fixed_time", "fixed_volume"] = "fixed_volume"
    k: int = 5
    delta_t: timedelta | None = None

    def __post_init__(self) -> None:
        if self.kind == "fixed_volume":
            if not isinstance(self.k, int) or self.k < 1:
                raise ValueError(f"k must be a positive integer, got {self.k!r}")
        elif self.kind == "fixed_time":
            if self.delta_t is None or self.delta_t <= timedelta(0):
                raise ValueError(f"delta_t must be a positive duration, got {self.delta_t!r}")
        else:
            raise ValueError(f"unknown sampling kind {self.kind!r}")

    @classmethod
    def volume(cls, k: int = 5) -> "SamplingPolicy":
        return cls("fixed_volume", k=k)

    @classmethod
    def time(cls, delta_t: timedelta) -> "SamplingPolicy":
        return cls("fixed_time", delta_t=delta_t)

    def __str__(self) -> str:
        if self.kind == "fixed_volume":
            return f"volume:{self.k}"
        return f"time:{self.delta_t.total_seconds():g}s"


_UNITS = {"ms": 0.001, "s": 1, "m": 60, "h": 3600, "d": 86400, "w": 604800}


def parse_duration(text: str) -> timedelta:
    """Parse ``"90"``, ``"90s"``, ``"15m"``, ``"6h"``, ``"1.5d"`` and the like."""
    match = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*(ms|s|m|h|d|w)?\s*", text)
    if not match:
        raise ValueError(f"invalid duration {text!r}")
    value = float(match.group(1)) * _UNITS[match.group(2) or "s"]
    return timedelta(seconds=value)


def parse_policy(text: str) -> SamplingPolicy:
    """Parse ``volume:K`` or ``time:DURATION``."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "volume":
        try:
            k = int(arg) if arg else 5
        except ValueError:
            raise ValueError(f"invalid posts-per-snapshot {arg!r}") from None
        return SamplingPolicy.volume(k)
    if kind == "time":
        return SamplingPolicy.time(parse_duration(arg))
    raise ValueError(f"invalid sampling policy {text!r}; expected volume:K or time:DURATION")


@dataclass(frozen=True, eq=False)
class SnapshotSequence:
    """Nested snapshots of one conversation.

    Snapshot ``i`` holds the first ``cuts[i]`` posts of ``conversation.order``
    together with their hashtags and the induced edges. ``boundaries[i]`` is
    the exclusive upper time bound of the snapshot.
    """

    conversation: Conversation
    policy: SamplingPolicy
    cuts: tuple[int, ...]
    boundaries: tuple[datetime, ...]

    def __len__(self) -> int:
        return len(self.cuts)

    @property
    def completion_rates(self) -> tuple[float, ...]:
        n = self.conversation.n_posts
        return tuple(c / n for c in self.cuts)

    def completion_rate(self, i: int) -> float:
        return self.cuts[self._index(i)] / self.conversation.n_posts

    def post_ids(self, i: int) -> tuple[str, ...]:
        return self.conversation.order[: self.cuts[self._index(i)]]

    def node_ids(self, i: int) -> set[str]:
        cut = self.cuts[self._index(i)]
        nodes = set(self.conversation.order[:cut])
        for tags in self.conversation.post_hashtags[:cut]:
            nodes.update(tags)
        return nodes

    def _index(self, i: int) -> int:
        if not 0 <= i < len(self.cuts):
            raise IndexError(f"snapshot index {i} out of range for {len(self.cuts)} snapshots")
        return i


def sample(conv: Conversation, policy: SamplingPolicy | None = None) -> SnapshotSequence:
    """Split ``conv`` into cumulative snapshots under ``policy`` (default: 5 posts each)."""
    policy = policy or SamplingPolicy.volume()
    n = conv.n_posts
    if n == 0:
        raise ValueError("cannot sample an empty conversation")
    ts = conv.timestamps_ms
    if policy.kind == "fixed_volume":
        k = policy.k
        cuts = tuple(min(j * k, n) for j in range(1, -(-n // k) + 1))
        # The instant just after the last included post; ties are resolved by rank.
        boundaries = tuple(_from_ms(conv, ts[c - 1] + 1) for c in cuts)
    else:
        step = policy.delta_t
        t0 = conv.t_first
        cuts_list = []
        bounds = []
        j = 1
        count = 0
        while True:
            bound = t0 + j * step
            bound_ms = to_millis(bound)
            while count < n and ts[count] < bound_ms:
                count += 1
            cuts_list.append(count)
            bounds.append(bound)
            if count == n:
                break
            j += 1
        cuts = tuple(cuts_list)
        boundaries = tuple(bounds)
    return SnapshotSequence(conv, policy, cuts, boundaries)


def _from_ms(conv: Conversation, ms: int) -> datetime:
    return conv.t_first + timedelta(milliseconds=ms - conv.timestamps_ms[0])


def snapshot_graph(seq: SnapshotSequence, i: int) -> TypedGraph:
    """Content-aware subgraph of snapshot ``i``."""
    return induced_subgraph(seq.conversation.graph, seq.node_ids(i))
