"""Payment-channel network graph and shortest-path counting.

A channel between ``a`` and ``b`` is stored once and exposed as two directed
edges, ``a -> b`` with capacity ``bal_a`` and ``b -> a`` with capacity
``bal_b``. Graph values are immutable: every mutator returns a new graph.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from pathlib import Path
from typing import Any, Hashable, Iterable, Iterator, Mapping

from .errors import (
    DuplicateNode,
    GraphFormatError,
    NegativeBalance,
    PcnError,
    SelfLoop,
    UnknownNode,
)

NodeId = Hashable
INF = math.inf


def id_key(node_id: NodeId) -> tuple:
    """Total order over mixed int/str ids (numbers first, then strings)."""
    if isinstance(node_id, Number) and not isinstance(node_id, bool):
        return (0, node_id, "")
    return (1, 0, str(node_id))


def exact(amount: Any) -> Fraction:
    """Exact rational value of a coin amount (floats read via their decimal repr)."""
    if isinstance(amount, (int, Fraction)):
        return Fraction(amount)
    return Fraction(str(amount))


@dataclass(frozen=True)
class Node:
    id: NodeId
    n_tx: float = 1.0
    zipf_s: float = 1.0

    def __post_init__(self) -> None:
        if self.n_tx < 0:
            raise PcnError(f"node {self.id!r}: n_tx must be >= 0")
        if self.zipf_s < 0:
            raise PcnError(f"node {self.id!r}: zipf_s must be >= 0")


@dataclass(frozen=True)
class Channel:
    a: NodeId
    b: NodeId
    bal_a: Any = 0
    bal_b: Any = 0
    channel_id: Any = None

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise SelfLoop(f"channel endpoints must differ, got {self.a!r} twice")
        if self.bal_a < 0 or self.bal_b < 0:
            raise NegativeBalance(
                f"channel {self.a!r}-{self.b!r}: balances must be >= 0"
            )


@dataclass(frozen=True)
class Edge:
    """One direction of a channel."""

    tail: NodeId
    head: NodeId
    capacity: Any
    channel_id: Any


class PcnGraph:
    """Directed capacitated multigraph of users and channel half-edges."""

    __slots__ = ("_nodes", "_channels", "_edges", "_out", "_in")

    def __init__(
        self,
        nodes: Iterable[Node] = (),
        channels: Iterable[Channel] = (),
        *,
        edges: Iterable[Edge] | None = None,
    ) -> None:
        table: dict[NodeId, Node] = {}
        for node in nodes:
            if node.id in table:
                raise DuplicateNode(f"duplicate node id {node.id!r}")
            table[node.id] = node
        chans: list[Channel] = []
        seen_ids: set = set()
        for ch in channels:
            for end in (ch.a, ch.b):
                if end not in table:
                    raise UnknownNode(f"channel endpoint {end!r} is not a node")
            if ch.channel_id is None or ch.channel_id in seen_ids:
                ch = Channel(ch.a, ch.b, ch.bal_a, ch.bal_b, _fresh_id(seen_ids, len(chans)))
            seen_ids.add(ch.channel_id)
            chans.append(ch)
        self._nodes = table
        self._channels = tuple(chans)
        if edges is None:
            built = []
            for ch in self._channels:
                built.append(Edge(ch.a, ch.b, ch.bal_a, ch.channel_id))
                built.append(Edge(ch.b, ch.a, ch.bal_b, ch.channel_id))
            self._edges = tuple(built)
        else:
            self._edges = tuple(edges)
        out: dict[NodeId, list[Edge]] = {v: [] for v in table}
        inc: dict[NodeId, list[Edge]] = {v: [] for v in table}
        for e in self._edges:
            out[e.tail].append(e)
            inc[e.head].append(e)
        self._out = {v: tuple(es) for v, es in out.items()}
        self._in = {v: tuple(es) for v, es in inc.items()}

    # -- read access -------------------------------------------------------

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes.values())

    @property
    def node_ids(self) -> tuple[NodeId, ...]:
        return tuple(self._nodes)

    @property
    def channels(self) -> tuple[Channel, ...]:
        return self._channels

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    @property
    def n(self) -> int:
        return len(self._nodes)

    @property
    def m(self) -> int:
        return len(self._edges)

    def node(self, node_id: NodeId) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._nodes

    def __iter__(self) -> Iterator[NodeId]:
        return iter(self._nodes)

    def __repr__(self) -> str:
        return f"PcnGraph(n={self.n}, channels={len(self._channels)}, m={self.m})"

    def out_edges(self, node_id: NodeId) -> tuple[Edge, ...]:
        self.node(node_id)
        return self._out[node_id]

    def in_edges(self, node_id: NodeId) -> tuple[Edge, ...]:
        self.node(node_id)
        return self._in[node_id]

    def in_degree(self, node_id: NodeId) -> int:
        return len(self.in_edges(node_id))

    def neighbors(self, node_id: NodeId) -> set[NodeId]:
        return {e.head for e in self.out_edges(node_id)} | {
            e.tail for e in self.in_edges(node_id)
        }

    # -- value-semantics updates -------------------------------------------

    def with_node(self, node: Node) -> "PcnGraph":
        if node.id in self._nodes:
            raise DuplicateNode(f"duplicate node id {node.id!r}")
        return PcnGraph((*self.nodes, node), self._channels)

    def with_channel(self, channel: Channel) -> "PcnGraph":
        return add_channel(self, channel)

    def with_node_attrs(self, **attrs: Any) -> "PcnGraph":
        """Copy with the given attributes overridden on every node."""
        nodes = [Node(v.id, attrs.get("n_tx", v.n_tx), attrs.get("zipf_s", v.zipf_s)) for v in self.nodes]
        return PcnGraph(nodes, self._channels, edges=self._edges)


def _fresh_id(taken: set, hint: int) -> str:
    i = hint
    while f"ch{i}" in taken:
        i += 1
    return f"ch{i}"


def add_channel(g: PcnGraph, c: Channel) -> PcnGraph:
    """Return a new graph with ``c`` added as two directed edges."""
    for end in (c.a, c.b):
        if end not in g:
            raise UnknownNode(f"channel endpoint {end!r} is not a node")
    return PcnGraph(g.nodes, (*g.channels, c))


def reduced_subgraph(g: PcnGraph, tx_size: Any) -> PcnGraph:
    """Keep only directed edges whose balance can forward ``tx_size``."""
    if tx_size < 0:
        raise PcnError("tx_size must be >= 0")
    if tx_size == 0:
        return g
    kept = [e for e in g.edges if e.capacity >= tx_size]
    return PcnGraph(g.nodes, g.channels, edges=kept)


# -- shortest paths ------------------------------------------------------------


@dataclass(frozen=True)
class PathStats:
    source: NodeId
    sink: NodeId
    distance: float
    path_count: int
    per_edge_counts: Mapping[Edge, int]


@dataclass
class BfsTree:
    """Shortest-path DAG rooted at one node (hop metric)."""

    root: NodeId
    order: list  # nodes in non-decreasing distance
    dist: dict
    sigma: dict  # number of shortest paths root->v (or v->root when reversed)
    pred: dict  # v -> edges entering v on the DAG (leaving v when reversed)


def bfs_tree(g: PcnGraph, root: NodeId, *, reverse: bool = False) -> BfsTree:
    """Single-source BFS with Brandes-style path counting.

    Parallel edges are distinct, so each contributes separately to ``sigma``.
    With ``reverse=True`` edges are walked backwards, giving counts of
    shortest paths *into* ``root``.
    """
    g.node(root)
    dist = {root: 0}
    sigma = {root: 1}
    pred: dict = {root: []}
    order = []
    queue = deque([root])
    step = g._in if reverse else g._out
    while queue:
        v = queue.popleft()
        order.append(v)
        dv = dist[v]
        for e in step[v]:
            w = e.tail if reverse else e.head
            if w not in dist:
                dist[w] = dv + 1
                sigma[w] = 0
                pred[w] = []
                queue.append(w)
            if dist[w] == dv + 1:
                sigma[w] += sigma[v]
                pred[w].append(e)
    return BfsTree(root, order, dist, sigma, pred)


def distances_from(g: PcnGraph, source: NodeId) -> dict:
    """Hop distances from ``source``; unreachable nodes map to ``inf``."""
    tree = bfs_tree(g, source)
    return {v: tree.dist.get(v, INF) for v in g}


def all_pairs_path_stats(g: PcnGraph) -> dict[tuple, PathStats]:
    """Distance, path count and per-edge path counts for every ordered pair."""
    fwd = {s: bfs_tree(g, s) for s in g}
    rev = {r: bfs_tree(g, r, reverse=True) for r in g}
    stats: dict[tuple, PathStats] = {}
    for s in g:
        fs = fwd[s]
        for r in g:
            if r == s:
                continue
            if r not in fs.dist:
                stats[(s, r)] = PathStats(s, r, INF, 0, {})
                continue
            dist = fs.dist[r]
            rr = rev[r]
            per_edge = {}
            for e in g.edges:
                dx = fs.dist.get(e.tail)
                dy = rr.dist.get(e.head)
                if dx is not None and dy is not None and dx + 1 + dy == dist:
                    per_edge[e] = fs.sigma[e.tail] * rr.sigma[e.head]
            stats[(s, r)] = PathStats(s, r, dist, fs.sigma[r], per_edge)
    return stats


# -- JSON --------------------------------------------------------------------


def graph_to_dict(g: PcnGraph) -> dict:
    return {
        "nodes": [{"id": v.id, "n_tx": v.n_tx, "zipf_s": v.zipf_s} for v in g.nodes],
        "channels": [
            {"a": c.a, "b": c.b, "bal_a": c.bal_a, "bal_b": c.bal_b, "id": c.channel_id}
            for c in g.channels
        ],
    }


def _field(obj: Mapping, key: str, where: str, kind=None, default: Any = ...) -> Any:
    if key not in obj:
        if default is ...:
            raise GraphFormatError(f"{where}: missing field '{key}'")
        return default
    value = obj[key]
    if kind is not None and (not isinstance(value, kind) or isinstance(value, bool)):
        raise GraphFormatError(f"{where}.{key}: expected number, got {value!r}")
    return value


def graph_from_dict(data: Mapping) -> PcnGraph:
    """Build and validate a graph from the JSON object layout."""
    if not isinstance(data, Mapping):
        raise GraphFormatError("top level: expected an object")
    raw_nodes = data.get("nodes")
    if not isinstance(raw_nodes, list):
        raise GraphFormatError("top level: 'nodes' must be a list")
    nodes = []
    seen = set()
    for i, raw in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        if not isinstance(raw, Mapping):
            raise GraphFormatError(f"{where}: expected an object")
        node_id = _field(raw, "id", where)
        if node_id in seen:
            raise GraphFormatError(f"{where}.id: duplicate id {node_id!r}")
        seen.add(node_id)
        n_tx = _field(raw, "n_tx", where, (int, float), 1.0)
        zipf_s = _field(raw, "zipf_s", where, (int, float), 1.0)
        if n_tx < 0:
            raise GraphFormatError(f"{where}.n_tx: must be >= 0")
        if zipf_s < 0:
            raise GraphFormatError(f"{where}.zipf_s: must be >= 0")
        nodes.append(Node(node_id, float(n_tx), float(zipf_s)))
    channels = []
    for i, raw in enumerate(data.get("channels", [])):
        where = f"channels[{i}]"
        if not isinstance(raw, Mapping):
            raise GraphFormatError(f"{where}: expected an object")
        a = _field(raw, "a", where)
        b = _field(raw, "b", where)
        for key, end in (("a", a), ("b", b)):
            if end not in seen:
                raise GraphFormatError(f"{where}.{key}: unknown node {end!r}")
        if a == b:
            raise GraphFormatError(f"{where}: self-loop on {a!r}")
        bal_a = _field(raw, "bal_a", where, (int, float), 0)
        bal_b = _field(raw, "bal_b", where, (int, float), 0)
        for key, bal in (("bal_a", bal_a), ("bal_b", bal_b)):
            if bal < 0:
                raise GraphFormatError(f"{where}.{key}: balance must be >= 0")
        channels.append(Channel(a, b, bal_a, bal_b, raw.get("id")))
    return PcnGraph(nodes, channels)


def load_json(path: str | Path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_graph(path: str | Path) -> PcnGraph:
    return graph_from_dict(load_json(path))
