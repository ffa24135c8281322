"""Typed directed graph used to represent conversations.

A :class:`TypedGraph` stores posts and content objects (hashtags) as typed
nodes and replies/usages as typed edges. Only the two schema triples

    (post, reply, post)
    (post, usage, hashtag)

are accepted. Post nodes carry a UTC timestamp; hashtag nodes do not.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Iterator

__all__ = [
    "NodeType",
    "EdgeType",
    "Node",
    "TypedGraph",
    "GraphError",
    "DuplicateNodeError",
    "MissingNodeError",
    "SchemaError",
    "FrozenGraphError",
    "SCHEMA",
    "weakly_connected_components",
    "induced_subgraph",
]


class NodeType(str, enum.Enum):
    POST = "post"
    HASHTAG = "hashtag"


class EdgeType(str, enum.Enum):
    REPLY = "reply"
    USAGE = "usage"


SCHEMA = frozenset(
    {
        (NodeType.POST, EdgeType.REPLY, NodeType.POST),
        (NodeType.POST, EdgeType.USAGE, NodeType.HASHTAG),
    }
)


class GraphError(ValueError):
    """Base class for graph construction and query errors."""


class DuplicateNodeError(GraphError):
    def __init__(self, node_id: str):
        super().__init__(f"node {node_id!r} already present")
        self.node_id = node_id


class MissingNodeError(GraphError, KeyError):
    def __init__(self, node_id: str):
        super().__init__(f"unknown node {node_id!r}")
        self.node_id = node_id

    def __str__(self) -> str:
        return self.args[0]


class SchemaError(GraphError):
    pass


class FrozenGraphError(GraphError):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    type: NodeType
    timestamp: datetime | None = None
    label: str | None = None


_DIRECTIONS = ("in", "out", "all")


class TypedGraph:
    """Directed graph with a node type map, an edge type map and node timestamps.

    At most one edge exists per ``(src, dst)`` pair, and a post has at most
    one outgoing reply edge. Iteration over nodes and edges is sorted by id so
    that every derived output is reproducible.
    """

    def __init__(self) -> None:
        self._nodes: dict[str, Node] = {}
        self._out: dict[str, dict[str, EdgeType]] = {}
        self._in: dict[str, dict[str, EdgeType]] = {}
        self._parent: dict[str, str] = {}
        self._frozen = False

    # -- construction ---------------------------------------------------

    def add_node(
        self,
        node_id: str,
        type: NodeType,
        timestamp: datetime | None = None,
        label: str | None = None,
    ) -> Node:
        self._check_mutable()
        if node_id in self._nodes:
            raise DuplicateNodeError(node_id)
        type = NodeType(type)
        if type is NodeType.POST and timestamp is None:
            raise SchemaError(f"post node {node_id!r} needs a timestamp")
        node = Node(node_id, type, timestamp, label)
        self._nodes[node_id] = node
        self._out[node_id] = {}
        self._in[node_id] = {}
        return node

    def add_edge(self, src: str, dst: str, type: EdgeType) -> tuple[str, str, EdgeType]:
        self._check_mutable()
        type = EdgeType(type)
        for node_id in (src, dst):
            if node_id not in self._nodes:
                raise MissingNodeError(node_id)
        triple = (self._nodes[src].type, type, self._nodes[dst].type)
        if triple not in SCHEMA:
            raise SchemaError(
                f"{type.value} edge {src!r} -> {dst!r} violates schema "
                f"({triple[0].value} -{type.value}-> {triple[2].value})"
            )
        if src == dst:
            raise SchemaError(f"self-loop on {src!r}")
        if dst in self._out[src]:
            raise SchemaError(f"edge {src!r} -> {dst!r} already present")
        if type is EdgeType.REPLY and src in self._parent:
            raise SchemaError(
                f"post {src!r} already replies to {self._parent[src]!r}"
            )
        self._out[src][dst] = type
        self._in[dst][src] = type
        if type is EdgeType.REPLY:
            self._parent[src] = dst
        return (src, dst, type)

    def freeze(self) -> "TypedGraph":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def _check_mutable(self) -> None:
        if self._frozen:
            raise FrozenGraphError("graph is frozen")

    # -- queries ---------------------------------------------------------

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise MissingNodeError(node_id) from None

    def node_type(self, node_id: str) -> NodeType:
        return self.node(node_id).type

    def timestamp(self, node_id: str) -> datetime | None:
        return self.node(node_id).timestamp

    def nodes(self, type: NodeType | None = None) -> list[str]:
        if type is None:
            return sorted(self._nodes)
        return sorted(n for n, info in self._nodes.items() if info.type is type)

    def edges(self, type: EdgeType | None = None) -> list[tuple[str, str, EdgeType]]:
        out = []
        for src in sorted(self._out):
            for dst in sorted(self._out[src]):
                etype = self._out[src][dst]
                if type is None or etype is type:
                    out.append((src, dst, etype))
        return out

    def number_of_edges(self, type: EdgeType | None = None) -> int:
        if type is None:
            return sum(len(v) for v in self._out.values())
        return sum(1 for v in self._out.values() for t in v.values() if t is type)

    def has_edge(self, src: str, dst: str, type: EdgeType | None = None) -> bool:
        etype = self._out.get(src, {}).get(dst)
        return etype is not None and (type is None or etype is type)

    def parent(self, post_id: str) -> str | None:
        """Target of the post's reply edge, ``None`` for a seed."""
        self.node(post_id)
        return self._parent.get(post_id)

    def successors(self, node_id: str, type: EdgeType | None = None) -> list[str]:
        self.node(node_id)
        return sorted(d for d, t in self._out[node_id].items() if type is None or t is type)

    def predecessors(self, node_id: str, type: EdgeType | None = None) -> list[str]:
        self.node(node_id)
        return sorted(s for s, t in self._in[node_id].items() if type is None or t is type)

    def degree(
        self, node_id: str, edge_type: EdgeType | None = None, direction: str = "all"
    ) -> int:
        """Number of incident edges matching ``edge_type`` and ``direction``."""
        if direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")
        self.node(node_id)
        count = 0
        if direction in ("out", "all"):
            count += _count(self._out[node_id], edge_type)
        if direction in ("in", "all"):
            count += _count(self._in[node_id], edge_type)
        return count

    def neighbors_undirected(self, node_id: str, type: EdgeType | None = None) -> Iterator[str]:
        for d, t in self._out[node_id].items():
            if type is None or t is type:
                yield d
        for s, t in self._in[node_id].items():
            if type is None or t is type:
                yield s

    def check_schema(self) -> None:
        """Full scan of the schema and reply out-degree invariants."""
        for src, dst, etype in self.edges():
            triple = (self._nodes[src].type, etype, self._nodes[dst].type)
            if triple not in SCHEMA:
                raise SchemaError(f"edge {src!r} -> {dst!r} violates schema")
        for node_id, info in self._nodes.items():
            if info.type is NodeType.POST:
                if info.timestamp is None:
                    raise SchemaError(f"post {node_id!r} has no timestamp")
                if _count(self._out[node_id], EdgeType.REPLY) > 1:
                    raise SchemaError(f"post {node_id!r} has several reply edges")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TypedGraph):
            return NotImplemented
        return self._nodes == other._nodes and self.edges() == other.edges()

    def __repr__(self) -> str:
        return (
            f"TypedGraph(posts={len(self.nodes(NodeType.POST))}, "
            f"hashtags={len(self.nodes(NodeType.HASHTAG))}, edges={self.number_of_edges()})"
        )


def _count(adj: dict[str, EdgeType], edge_type: EdgeType | None) -> int:
    if edge_type is None:
        return len(adj)
    return sum(1 for t in adj.values() if t is edge_type)


def weakly_connected_components(
    graph: TypedGraph, restrict: EdgeType | None = None
) -> list[set[str]]:
    """Partition the nodes into weakly connected components.

    With ``restrict`` set, only edges of that type connect nodes; nodes with
    no such edge end up as singletons. Components are ordered by size
    (descending), then by their smallest member id.
    """
    seen: set[str] = set()
    components = []
    for start in graph.nodes():
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nb in graph.neighbors_undirected(cur, restrict):
                if nb not in seen:
                    seen.add(nb)
                    comp.add(nb)
                    queue.append(nb)
        components.append(comp)
    components.sort(key=lambda c: (-len(c), min(c)))
    return components


def induced_subgraph(graph: TypedGraph, node_ids: Iterable[str]) -> TypedGraph:
    """Subgraph with exactly ``node_ids`` and every edge between them."""
    keep = set(node_ids)
    for node_id in keep:
        if node_id not in graph:
            raise MissingNodeError(node_id)
    sub = TypedGraph()
    for node_id in sorted(keep):
        info = graph.node(node_id)
        sub.add_node(node_id, info.type, info.timestamp, info.label)
    for src, dst, etype in graph.edges():
        if src in keep and dst in keep:
            sub.add_edge(src, dst, etype)
    return sub.freeze()
