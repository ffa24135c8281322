"""Synthetic conversations with known activity rate, topology and hashtag script.

Timestamps follow the saturation law by inverse-CDF sampling of an
exponential truncated to the unit lifetime, then scaled to a wall-clock
duration (7 days by default). Posts are generated through :class:`RawPost`
and assembled by the ingest code, so synthetic data exercises the same path
as real data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Sequence

import numpy as np

from .hijack import FAILED_HIJACKING, HIJACKING, NO_HIJACKING
from .ingest import Conversation, RawPost, build_conversation

__all__ = [
    "SynthSpec",
    "TOPOLOGIES",
    "DEFAULT_START",
    "DEFAULT_DURATION",
    "gen_timestamps",
    "gen_parents",
    "gen_posts",
    "gen_tree",
    "gen_conversation",
    "gen_hijack_posts",
    "gen_hijack_scenario",
    "gen_corpus",
]

TOPOLOGIES = ("star", "path", "uniform_attach", "recency_attach")
DEFAULT_START = datetime(2021, 1, 1, tzinfo=timezone.utc)
DEFAULT_DURATION = timedelta(days=7)


@dataclass(frozen=True)
class SynthSpec:
    n_posts: int = 100
    alpha: float = 32.5
    topology: str = "uniform_attach"
    bias: float = 0.0
    hashtag_script: tuple[tuple[int, int, str], ...] = ()
    rng_seed: int = 0
    duration: timedelta = DEFAULT_DURATION
    start: datetime = field(default=DEFAULT_START)

    def __post_init__(self) -> None:
        if self.n_posts < 1:
            raise ValueError("n_posts must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}; expected one of {TOPOLOGIES}")
        if self.bias < 0:
            raise ValueError("bias must be >= 0")


def gen_timestamps(n: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` sorted lifetime fractions whose empirical CDF follows ``1 - exp(-alpha t)``.

    The first value is pinned to 0 and the last to 1.
    """
    if n < 2:
        raise ValueError("need at least 2 timestamps")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    u = rng.uniform(0.0, -math.expm1(-alpha), size=n)
    t = np.sort(-np.log1p(-u) / alpha)
    t[0] = 0.0
    t[-1] = 1.0
    return t


def gen_parents(
    n: int, topology: str, rng: np.random.Generator, bias: float = 0.0
) -> list[int]:
    """Parent rank of each post (-1 for the seed); parents always precede children."""
    if n < 1:
        raise ValueError("n must be >= 1")
    parents = [-1]
    for j in range(1, n):
        if topology == "star":
            parents.append(0)
        elif topology == "path":
            parents.append(j - 1)
        elif topology == "uniform_attach":
            parents.append(int(rng.integers(0, j)))
        elif topology == "recency_attach":
            age = np.arange(j - 1, -1, -1, dtype=np.float64)
            w = np.exp(-bias * age)
            parents.append(int(rng.choice(j, p=w / w.sum())))
        else:
            raise ValueError(f"unknown topology {topology!r}")
    return parents


def _instants(fractions: np.ndarray, start: datetime, duration: timedelta) -> list[datetime]:
    total_ms = int(duration.total_seconds() * 1000)
    return [start + timedelta(milliseconds=int(round(f * total_ms))) for f in fractions]


def gen_posts(
    conversation_id: str,
    parents: Sequence[int],
    fractions: Sequence[float],
    hashtags: Sequence[Sequence[str]] | None = None,
    start: datetime = DEFAULT_START,
    duration: timedelta = DEFAULT_DURATION,
) -> list[RawPost]:
    """RawPosts for a scripted conversation.

    Post ids are zero-padded ranks, so millisecond ties still sort in rank order.
    """
    n = len(parents)
    width = max(6, len(str(n)))
    ids = [f"{conversation_id}-{j:0{width}d}" for j in range(n)]
    instants = _instants(np.asarray(fractions, dtype=np.float64), start, duration)
    posts = []
    for j in range(n):
        posts.append(
            RawPost(
                id=ids[j],
                conversation_id=conversation_id,
                created_at=instants[j],
                in_reply_to=None if parents[j] < 0 else ids[parents[j]],
                hashtags=tuple(hashtags[j]) if hashtags else (),
            )
        )
    return posts


def _fractions(n: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    return np.zeros(1) if n == 1 else gen_timestamps(n, alpha, rng)


def gen_tree(
    n: int,
    topology: str,
    rng: np.random.Generator,
    alpha: float = 32.5,
    bias: float = 0.0,
    conversation_id: str = "synth",
) -> Conversation:
    parents = gen_parents(n, topology, rng, bias)
    fractions = _fractions(n, alpha, rng)
    return build_conversation(conversation_id, gen_posts(conversation_id, parents, fractions))


def gen_conversation(spec: SynthSpec, conversation_id: str = "synth") -> Conversation:
    """Conversation from a :class:`SynthSpec`.

    ``hashtag_script`` entries ``(lo, hi, tag)`` attach ``tag`` to posts with
    rank in ``[lo, hi)``.
    """
    rng = np.random.default_rng(spec.rng_seed)
    parents = gen_parents(spec.n_posts, spec.topology, rng, spec.bias)
    fractions = _fractions(spec.n_posts, spec.alpha, rng)
    tags: list[list[str]] = [[] for _ in range(spec.n_posts)]
    for lo, hi, tag in spec.hashtag_script:
        for j in range(max(lo, 0), min(hi, spec.n_posts)):
            tags[j].append(tag)
    posts = gen_posts(conversation_id, parents, fractions, tags, spec.start, spec.duration)
    return build_conversation(conversation_id, posts)


def _place(rng: np.random.Generator, candidates: Sequence[int], count: int) -> list[int]:
    return sorted(int(c) for c in rng.choice(np.asarray(candidates), size=count, replace=False))


def _hijack_tags(label: str, n: int, rng: np.random.Generator) -> list[list[str]]:
    """Hashtag script whose degree series yields ``label`` under 5-post snapshots.

    The constructions only rely on final counts and on the order of posts:
    - no_hijacking: the seed tag is used by ranks 0..m (m >= 5); the rival
      tag gets at most m uses, all after rank m, so it never exceeds the seed
      tag.
    - hijacking: the seed tag has 1-3 uses, the rival at least 5 and more
      than the seed tag at the end.
    - failed_hijacking: the rival takes ranks 1..c (c >= 2), so it leads the
      first snapshot with c-or-4 uses against 1; the seed tag then collects
      at least c more uses after the first snapshot and leads at the end.
    Distractor tags are used at most once each.
    """
    init, rival = "klimaschutz", "tempolimit"
    tags: list[list[str]] = [[] for _ in range(n)]
    if label == NO_HIJACKING:
        m = int(rng.integers(5, 16))
        for j in range(m + 1):
            tags[j].append(init)
        later = range(m + 1, n)
        c = int(rng.integers(0, min(m, len(later)) + 1))
        for j in _place(rng, later, c):
            tags[j].append(rival)
    elif label == HIJACKING:
        i_uses = int(rng.integers(1, 4))
        r_uses = int(rng.integers(max(5, i_uses + 1), max(6, n // 3)))
        tags[0].append(init)
        for j in _place(rng, range(1, n), i_uses - 1):
            tags[j].append(init)
        for j in _place(rng, range(1, n), r_uses):
            tags[j].append(rival)
    elif label == FAILED_HIJACKING:
        c = int(rng.integers(2, 9))
        tags[0].append(init)
        for j in range(1, c + 1):
            tags[j].append(rival)
        later = range(max(c + 1, 5), n)
        r = int(rng.integers(max(c, 4), min(len(later), 3 * c + 4) + 1))
        for j in _place(rng, later, r):
            tags[j].append(init)
    else:
        raise ValueError(f"unknown scenario label {label!r}")
    for d in range(int(rng.integers(0, 4))):
        j = int(rng.integers(1, n))
        tags[j].append(f"distractor{d}")
    return tags


def gen_hijack_posts(
    label: str,
    rng: np.random.Generator,
    conversation_id: str = "hijack",
    n_posts: int | None = None,
    alpha: float = 32.5,
    topology: str | None = None,
) -> list[RawPost]:
    n = int(rng.integers(40, 121)) if n_posts is None else n_posts
    if n < 40:
        raise ValueError("scripted hijack scenarios need at least 40 posts")
    if topology is None:
        topology = TOPOLOGIES[int(rng.integers(0, len(TOPOLOGIES)))]
    parents = gen_parents(n, topology, rng, bias=0.5)
    fractions = gen_timestamps(n, alpha, rng)
    tags = _hijack_tags(label, n, rng)
    return gen_posts(conversation_id, parents, fractions, tags)


def gen_hijack_scenario(
    label: str,
    rng: np.random.Generator,
    conversation_id: str = "hijack",
    n_posts: int | None = None,
    alpha: float = 32.5,
    topology: str | None = None,
) -> Conversation:
    """Conversation scripted to classify as ``label`` with default parameters."""
    posts = gen_hijack_posts(label, rng, conversation_id, n_posts, alpha, topology)
    return build_conversation(conversation_id, posts)


def gen_corpus(
    n_conversations: int,
    n_posts: int = 100,
    alpha: float = 32.5,
    topology: str = "uniform_attach",
    bias: float = 0.0,
    seed: int = 0,
    scripted_hashtags: bool = True,
) -> list[RawPost]:
    """Posts of ``n_conversations`` synthetic conversations.

    With ``scripted_hashtags``, conversation ``i`` carries the hashtag script
    of the i-th label in (hijacking, failed_hijacking, no_hijacking), cycled;
    this needs ``n_posts >= 40``.
    """
    labels = (HIJACKING, FAILED_HIJACKING, NO_HIJACKING)
    seeds = np.random.SeedSequence(seed).spawn(n_conversations)
    width = max(4, len(str(n_conversations)))
    posts: list[RawPost] = []
    for i, child in enumerate(seeds):
        rng = np.random.default_rng(child)
        cid = f"c{i:0{width}d}"
        if scripted_hashtags:
            posts.extend(
                gen_hijack_posts(labels[i % 3], rng, cid, n_posts, alpha, topology)
            )
        else:
            parents = gen_parents(n_posts, topology, rng, bias)
            posts.extend(gen_posts(cid, parents, _fractions(n_posts, alpha, rng)))
    return posts
