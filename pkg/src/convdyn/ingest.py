"""Post parsing, conversation grouping and reply-tree assembly."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import zlib
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import cached_property
from typing import IO, Iterable, Iterator

from .hin import EdgeType, NodeType, TypedGraph, weakly_connected_components

log = logging.getLogger(__name__)

__all__ = [
    "RawPost",
    "ParseIssue",
    "Conversation",
    "AssemblyStats",
    "normalize_hashtag",
    "parse_timestamp",
    "format_timestamp",
    "to_millis",
    "iter_canonical",
    "parse_canonical",
    "iter_twitter_v2",
    "parse_twitter_v2",
    "to_canonical",
    "extract_content",
    "build_conversation",
    "assemble",
    "assemble_with_stats",
    "group_by_conversation",
    "assemble_stream",
]

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def normalize_hashtag(tag: str) -> str:
    tag = tag.strip()
    if tag.startswith("#"):
        tag = tag[1:]
    return tag.casefold()


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 string into an aware UTC datetime at millisecond precision.

    Naive values are taken to be UTC.
    """
    if not isinstance(value, str) or not value:
        raise ValueError(f"invalid timestamp {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.replace(microsecond=dt.microsecond - dt.microsecond % 1000)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.") + (
        f"{dt.microsecond // 1000:03d}Z"
    )


def to_millis(dt: datetime) -> int:
    delta = dt - _EPOCH
    return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000


@dataclass(frozen=True)
class RawPost:
    id: str
    conversation_id: str
    created_at: datetime
    in_reply_to: str | None = None
    hashtags: tuple[str, ...] = ()
    author_id: str | None = None
    text: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("post id must be nonempty")
        if not self.conversation_id:
            raise ValueError(f"post {self.id!r}: conversation_id must be nonempty")
        normalized = tuple(normalize_hashtag(t) for t in self.hashtags)
        object.__setattr__(self, "hashtags", tuple(t for t in normalized if t))

    @property
    def sort_key(self) -> tuple[int, str]:
        return (to_millis(self.created_at), self.id)


@dataclass(frozen=True)
class ParseIssue:
    line_no: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line_no}: {self.message}"


def _opt_str(record: dict, key: str) -> str | None:
    value = record.get(key)
    if value is None or value == "":
        return None
    return str(value)


def _required_str(record: dict, key: str) -> str:
    value = record.get(key)
    if value is None or value == "":
        raise ValueError(f"missing {key}")
    return str(value)


def _canonical_record(record: dict) -> RawPost:
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    hashtags = record.get("hashtags") or []
    if not isinstance(hashtags, list) or not all(isinstance(h, str) for h in hashtags):
        raise ValueError("hashtags must be an array of strings")
    return RawPost(
        id=_required_str(record, "id"),
        conversation_id=_required_str(record, "conversation_id"),
        created_at=parse_timestamp(_required_str(record, "created_at")),
        in_reply_to=_opt_str(record, "in_reply_to"),
        hashtags=tuple(hashtags),
        author_id=_opt_str(record, "author_id"),
        text=record.get("text"),
    )


def _twitter_record(record: dict) -> RawPost:
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    parent = None
    for ref in record.get("referenced_tweets") or []:
        if isinstance(ref, dict) and ref.get("type") == "replied_to":
            parent = _opt_str(ref, "id")
            break
    entities = record.get("entities") or {}
    tags = []
    for item in entities.get("hashtags") or []:
        if isinstance(item, dict) and isinstance(item.get("tag"), str):
            tags.append(item["tag"])
    return RawPost(
        id=_required_str(record, "id"),
        conversation_id=_required_str(record, "conversation_id"),
        created_at=parse_timestamp(_required_str(record, "created_at")),
        in_reply_to=parent,
        hashtags=tuple(tags),
        author_id=_opt_str(record, "author_id"),
        text=record.get("text"),
    )


def _unwrap_twitter(payload):
    # Tolerate API response envelopes: {"data": tweet} or {"data": [tweets]}.
    if isinstance(payload, dict) and "data" in payload and "id" not in payload:
        data = payload["data"]
        return data if isinstance(data, list) else [data]
    return [payload]


def _iter_records(stream: Iterable[str], convert, unwrap, issues) -> Iterator[RawPost]:
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            _report(issues, line_no, f"invalid JSON: {exc.msg}")
            continue
        for record in unwrap(payload):
            try:
                yield convert(record)
            except (ValueError, TypeError) as exc:
                _report(issues, line_no, str(exc))


def _report(issues: list[ParseIssue] | None, line_no: int, message: str) -> None:
    issue = ParseIssue(line_no, message)
    log.warning("skipping record: %s", issue)
    if issues is not None:
        issues.append(issue)


def iter_canonical(
    stream: Iterable[str], issues: list[ParseIssue] | None = None
) -> Iterator[RawPost]:
    """Stream RawPosts from line-delimited canonical JSON records.

    Malformed lines are skipped; each is logged and appended to ``issues``.
    """
    return _iter_records(stream, _canonical_record, lambda p: [p], issues)


def parse_canonical(
    stream: Iterable[str], issues: list[ParseIssue] | None = None
) -> list[RawPost]:
    return list(iter_canonical(stream, issues))


def iter_twitter_v2(
    stream: Iterable[str], issues: list[ParseIssue] | None = None
) -> Iterator[RawPost]:
    """Stream RawPosts from raw Twitter API v2 tweet objects.

    The parent is the ``referenced_tweets`` entry of type ``replied_to``;
    quotes and retweets are ignored. Hashtags come from
    ``entities.hashtags[].tag``.
    """
    return _iter_records(stream, _twitter_record, _unwrap_twitter, issues)


def parse_twitter_v2(
    stream: Iterable[str], issues: list[ParseIssue] | None = None
) -> list[RawPost]:
    return list(iter_twitter_v2(stream, issues))


def to_canonical(post: RawPost) -> str:
    """Serialize a post as one canonical JSON line (no trailing newline)."""
    record: dict[str, object] = {
        "id": post.id,
        "conversation_id": post.conversation_id,
        "created_at": format_timestamp(post.created_at),
        "hashtags": list(post.hashtags),
    }
    if post.in_reply_to is not None:
        record["in_reply_to"] = post.in_reply_to
    if post.author_id is not None:
        record["author_id"] = post.author_id
    if post.text is not None:
        record["text"] = post.text
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def extract_content(post: RawPost) -> frozenset[str]:
    """Hashtag node ids extracted from a post, deduplicated."""
    return frozenset(normalize_hashtag(t) for t in post.hashtags if normalize_hashtag(t))


@dataclass(frozen=True, eq=False)
class Conversation:
    """A reply tree together with the hashtags its posts use.

    ``order`` lists the post ids sorted by ``(timestamp, id)``; every
    temporal analysis works on prefixes of it.
    """

    conversation_id: str
    seed_id: str
    graph: TypedGraph
    order: tuple[str, ...]
    flags: frozenset[str] = frozenset()

    @property
    def n_posts(self) -> int:
        return len(self.order)

    @property
    def t_first(self) -> datetime:
        return self.graph.timestamp(self.order[0])

    @property
    def t_last(self) -> datetime:
        return self.graph.timestamp(self.order[-1])

    @cached_property
    def rank(self) -> dict[str, int]:
        return {post_id: i for i, post_id in enumerate(self.order)}

    @cached_property
    def timestamps_ms(self) -> tuple[int, ...]:
        return tuple(to_millis(self.graph.timestamp(p)) for p in self.order)

    @cached_property
    def parent_ranks(self) -> tuple[int, ...]:
        """Rank of each post's parent in ``order``; -1 for the seed."""
        rank = self.rank
        out = []
        for post_id in self.order:
            parent = self.graph.parent(post_id)
            out.append(-1 if parent is None else rank[parent])
        return tuple(out)

    @cached_property
    def post_hashtags(self) -> tuple[tuple[str, ...], ...]:
        """Hashtags used by each post, in ``order``."""
        return tuple(
            tuple(self.graph.successors(p, EdgeType.USAGE)) for p in self.order
        )

    def hashtags(self) -> list[str]:
        return self.graph.nodes(NodeType.HASHTAG)

    def __repr__(self) -> str:
        return (
            f"Conversation({self.conversation_id!r}, seed={self.seed_id!r}, "
            f"posts={self.n_posts}, flags={sorted(self.flags)})"
        )


@dataclass
class AssemblyStats:
    records: int = 0
    duplicate_records: int = 0
    groups: int = 0
    detached_posts: int = 0
    cyclic_groups: int = 0
    dropped_small: int = 0
    conversations: int = 0
    flagged: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "records": self.records,
            "duplicate_records": self.duplicate_records,
            "groups": self.groups,
            "detached_posts": self.detached_posts,
            "cyclic_groups": self.cyclic_groups,
            "dropped_small": self.dropped_small,
            "conversations": self.conversations,
            "flagged": dict(sorted(self.flagged.items())),
        }


class _CyclicGroup(ValueError):
    pass


def build_conversation(conversation_id: str, posts: Iterable[RawPost]) -> Conversation:
    """Build a conversation graph from posts that already form one reply tree.

    Replies whose parent is absent are treated as parentless; the caller is
    responsible for passing a single connected component.
    """
    posts = sorted(posts, key=lambda p: p.sort_key)
    if not posts:
        raise ValueError("conversation has no posts")
    ids = {p.id for p in posts}
    graph = TypedGraph()
    for p in posts:
        graph.add_node(p.id, NodeType.POST, p.created_at, label=p.text)
    for p in posts:
        if p.in_reply_to is not None and p.in_reply_to in ids and p.in_reply_to != p.id:
            graph.add_edge(p.id, p.in_reply_to, EdgeType.REPLY)
    for p in posts:
        for tag in sorted(extract_content(p)):
            if tag not in graph:
                graph.add_node(tag, NodeType.HASHTAG, label=tag)
            graph.add_edge(p.id, tag, EdgeType.USAGE)
    roots = [p for p in posts if graph.parent(p.id) is None]
    if not roots:
        raise _CyclicGroup(f"conversation {conversation_id!r} has a reply cycle")
    flags = set()
    if len(roots) > 1:
        flags.add("multiple_roots")
    seed = roots[0]
    if seed.id != posts[0].id:
        flags.add("seed_not_earliest")
    rank = {p.id: i for i, p in enumerate(posts)}
    if any(
        graph.parent(p.id) is not None and rank[graph.parent(p.id)] > rank[p.id]
        for p in posts
    ):
        flags.add("reply_before_parent")
    return Conversation(
        conversation_id=conversation_id,
        seed_id=seed.id,
        graph=graph.freeze(),
        order=tuple(p.id for p in posts),
        flags=frozenset(flags),
    )


def _giant_component(posts: list[RawPost]) -> tuple[list[RawPost], int]:
    by_id = {p.id: p for p in posts}
    graph = TypedGraph()
    for p in posts:
        graph.add_node(p.id, NodeType.POST, p.created_at)
    for p in posts:
        if p.in_reply_to in by_id and p.in_reply_to != p.id:
            graph.add_edge(p.id, p.in_reply_to, EdgeType.REPLY)
    components = weakly_connected_components(graph, EdgeType.REPLY)
    best_size = len(components[0])
    tied = [c for c in components if len(c) == best_size]
    # Size ties go to the component holding the earliest post.
    giant = min(tied, key=lambda c: min(by_id[i].sort_key for i in c))
    kept = [by_id[i] for i in sorted(giant)]
    return kept, len(posts) - len(kept)


def _dedupe(posts: Iterable[RawPost], stats: AssemblyStats) -> dict[str, RawPost]:
    chosen: dict[str, RawPost] = {}
    for p in posts:
        stats.records += 1
        prev = chosen.get(p.id)
        if prev is None:
            chosen[p.id] = p
            continue
        stats.duplicate_records += 1
        if _record_key(p) < _record_key(prev):
            chosen[p.id] = p
    return chosen


def _record_key(p: RawPost) -> tuple:
    return (p.conversation_id, p.sort_key, p.in_reply_to or "", p.hashtags, p.author_id or "", p.text or "")


def _assemble_group(
    conversation_id: str, group: list[RawPost], min_size: int, stats: AssemblyStats
) -> Conversation | None:
    stats.groups += 1
    kept, detached = _giant_component(group)
    stats.detached_posts += detached
    if len(kept) < min_size:
        stats.dropped_small += 1
        return None
    try:
        conv = build_conversation(conversation_id, kept)
    except _CyclicGroup as exc:
        log.warning("dropping %s", exc)
        stats.cyclic_groups += 1
        return None
    for flag in conv.flags:
        stats.flagged[flag] = stats.flagged.get(flag, 0) + 1
    return conv


def assemble_with_stats(
    posts: Iterable[RawPost], min_size: int = 50
) -> tuple[list[Conversation], AssemblyStats]:
    """Group posts into conversations and keep each group's giant reply component.

    Conversations with fewer than ``min_size`` retained posts (seed included)
    are dropped. The result is sorted by conversation id and does not depend
    on input order.
    """
    stats = AssemblyStats()
    unique = _dedupe(posts, stats)
    groups: dict[str, list[RawPost]] = defaultdict(list)
    for p in unique.values():
        groups[p.conversation_id].append(p)
    conversations = []
    for conversation_id in sorted(groups):
        conv = _assemble_group(conversation_id, groups[conversation_id], min_size, stats)
        if conv is not None:
            conversations.append(conv)
    stats.conversations = len(conversations)
    return conversations, stats


def assemble(posts: Iterable[RawPost], min_size: int = 50) -> list[Conversation]:
    return assemble_with_stats(posts, min_size)[0]


def group_by_conversation(
    posts: Iterable[RawPost], memory_cap: int = 1_000_000, tmpdir: str | None = None
) -> Iterator[tuple[str, list[RawPost]]]:
    """Group a post stream by conversation id with bounded memory.

    Up to ``memory_cap`` records are buffered. Past that, records are spilled
    to hash-partitioned temporary files, and each partition is grouped
    separately once the stream is exhausted. Groups are yielded in
    conversation-id order within each partition; callers needing a global
    order sort the results.
    """
    if memory_cap < 1:
        raise ValueError("memory_cap must be >= 1")
    buffer: dict[str, list[RawPost]] = defaultdict(list)
    buffered = 0
    spill_dir = None
    spill_files: dict[int, IO[str]] = {}
    n_parts = 64
    for p in posts:
        buffer[p.conversation_id].append(p)
        buffered += 1
        if buffered >= memory_cap:
            if spill_dir is None:
                spill_dir = tempfile.mkdtemp(prefix="convdyn-spill-", dir=tmpdir)
            _spill(buffer, spill_files, spill_dir, n_parts)
            buffer.clear()
            buffered = 0
    if spill_dir is None:
        for cid in sorted(buffer):
            yield cid, buffer[cid]
        return
    _spill(buffer, spill_files, spill_dir, n_parts)
    buffer.clear()
    try:
        for part in sorted(spill_files):
            fh = spill_files[part]
            fh.seek(0)
            grouped: dict[str, list[RawPost]] = defaultdict(list)
            for p in iter_canonical(fh):
                grouped[p.conversation_id].append(p)
            for cid in sorted(grouped):
                yield cid, grouped[cid]
    finally:
        for fh in spill_files.values():
            fh.close()
        for name in os.listdir(spill_dir):
            os.remove(os.path.join(spill_dir, name))
        os.rmdir(spill_dir)


def _spill(buffer, spill_files, spill_dir, n_parts) -> None:
    for cid, group in buffer.items():
        part = zlib.crc32(cid.encode("utf-8")) % n_parts
        fh = spill_files.get(part)
        if fh is None:
            fh = open(os.path.join(spill_dir, f"part-{part:03d}.jsonl"), "w+", encoding="utf-8")
            spill_files[part] = fh
        for p in group:
            fh.write(to_canonical(p))
            fh.write("\n")


def assemble_stream(
    posts: Iterable[RawPost],
    min_size: int = 50,
    memory_cap: int = 1_000_000,
    tmpdir: str | None = None,
) -> tuple[list[Conversation], AssemblyStats]:
    """Bounded-memory variant of :func:`assemble_with_stats`.

    Post ids already claimed by an earlier group are dropped as duplicates,
    so no post ends up in two conversations.
    """
    stats = AssemblyStats()
    claimed: set[str] = set()
    conversations = []
    for cid, group in group_by_conversation(posts, memory_cap, tmpdir):
        unique = _dedupe(group, stats)
        fresh = [p for pid, p in unique.items() if pid not in claimed]
        stats.duplicate_records += len(unique) - len(fresh)
        claimed.update(unique)
        if not fresh:
            continue
        conv = _assemble_group(cid, fresh, min_size, stats)
        if conv is not None:
            conversations.append(conv)
    conversations.sort(key=lambda c: c.conversation_id)
    stats.conversations = len(conversations)
    return conversations, stats
