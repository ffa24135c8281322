"""Builders and independent oracles shared by the tests.

The oracles deliberately avoid the package's own algorithms: the Wiener
oracle runs a breadth-first search from every node over the directed reply
edges, and the curve oracle evaluates step curves point by point.
"""

from __future__ import annotations

import math
from collections import deque
from datetime import datetime, timedelta, timezone

from convdyn.hin import EdgeType, NodeType, TypedGraph
from convdyn.ingest import RawPost, build_conversation

T0 = datetime(2021, 1, 1, tzinfo=timezone.utc)


def posts_from_parents(parents, seconds=None, tags=None, cid="c"):
    n = len(parents)
    seconds = list(range(n)) if seconds is None else seconds
    ids = [f"p{j:04d}" for j in range(n)]
    return [
        RawPost(
            id=ids[j],
            conversation_id=cid,
            created_at=T0 + timedelta(seconds=seconds[j]),
            in_reply_to=None if parents[j] < 0 else ids[parents[j]],
            hashtags=tuple(tags[j]) if tags else (),
        )
        for j in range(n)
    ]


def conv_from_parents(parents, seconds=None, tags=None, cid="c"):
    return build_conversation(cid, posts_from_parents(parents, seconds, tags, cid))


def reply_graph(parents, ids=None):
    ids = ids or [f"p{j:04d}" for j in range(len(parents))]
    g = TypedGraph()
    for j, node_id in enumerate(ids):
        g.add_node(node_id, NodeType.POST, T0 + timedelta(seconds=j))
    for j, p in enumerate(parents):
        if p >= 0:
            g.add_edge(ids[j], ids[p], EdgeType.REPLY)
    return g


def bfs_wiener_oracle(graph: TypedGraph) -> float:
    """All-pairs BFS over directed reply edges; unreachable pairs count 0."""
    posts = [n for n in graph.nodes() if graph.node_type(n) is NodeType.POST]
    n = len(posts)
    if n == 1:
        return 0.0
    adj = {p: [d for d in graph.successors(p, EdgeType.REPLY)] for p in posts}
    total = 0
    for src in posts:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            for nxt in adj[cur]:
                if nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    queue.append(nxt)
        total += sum(dist.values())
    return total / (n * (n - 1))


def step_value(times, lam):
    """Fraction of ``times`` that are <= ``lam`` by direct counting."""
    return sum(1 for t in times if t <= lam) / len(times)


def population_sd(values):
    m = sum(values) / len(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / len(values))
