"""Network-creation game on simple topologies.

Every node sends with the same Zipf exponent ``s``; ``a`` scales a node's
own routing fees, ``b`` the fees it earns as an intermediary, and ``l`` is
charged per incident edge. Graphs are handled as undirected adjacency sets;
channel balances play no role here.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import BadSize, PcnError, TooLarge
from .graph import INF, Channel, Node, NodeId, PcnGraph, id_key
from .txmodel import rank_factors_from_degrees

Adjacency = Mapping[NodeId, frozenset]
GAIN_RTOL = 1e-10


@dataclass(frozen=True)
class GameParams:
    a: float
    b: float
    l: float
    s: float
    n: int | None = None  # index of the harmonic normalizer (star: leaf count)

    def __post_init__(self) -> None:
        for name in ("a", "b", "l", "s"):
            if getattr(self, name) < 0:
                raise PcnError(f"{name} must be >= 0")


@dataclass(frozen=True)
class DeviationReport:
    node: NodeId
    best_response: frozenset
    utility_gain: float
    is_profitable: bool
    current_utility: float = -INF
    best_utility: float = -INF

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "gain": self.utility_gain,
            "best_response": sorted(self.best_response, key=id_key),
        }


@dataclass(frozen=True)
class NashReport:
    is_ne: bool
    deviations: tuple[DeviationReport, ...]

    @property
    def profitable(self) -> tuple[DeviationReport, ...]:
        return tuple(d for d in self.deviations if d.is_profitable)


def harmonic(n: int, s: float) -> float:
    """Generalized harmonic number ``sum_{k=1..n} k^-s``."""
    if n < 1:
        raise PcnError("harmonic number needs n >= 1")
    if s == 0:
        return float(n)
    return math.fsum(k ** -s for k in range(1, n + 1))


# -- topologies ----------------------------------------------------------------------


def graph_from_edges(
    nodes: Iterable[NodeId], edges: Iterable[tuple], *, n_tx: float = 1.0, zipf_s: float = 1.0
) -> PcnGraph:
    """Unit-balance channel graph with the given undirected edges."""
    return PcnGraph(
        [Node(v, n_tx, zipf_s) for v in nodes],
        [Channel(x, y, 1, 1) for x, y in edges],
    )


def make_topology(kind: str, n: int, *, seed: int = 0, edge_prob: float = 0.5) -> PcnGraph:
    """Labelled test topologies with nodes ``0 .. N-1``.

    ``star`` has ``n`` leaves around center 0 and ``circle`` has ``n + 1``
    nodes; ``path``, ``complete`` and ``random`` have ``n`` nodes.
    """
    if not isinstance(n, int) or n < 2:
        raise BadSize(f"topology size must be an integer >= 2, got {n!r}")
    if kind == "star":
        return graph_from_edges(range(n + 1), [(0, i) for i in range(1, n + 1)])
    if kind == "path":
        return graph_from_edges(range(n), [(i, i + 1) for i in range(n - 1)])
    if kind == "circle":
        size = n + 1
        return graph_from_edges(range(size), [(i, (i + 1) % size) for i in range(size)])
    if kind == "complete":
        return graph_from_edges(range(n), itertools.combinations(range(n), 2))
    if kind == "random":
        if not 0 <= edge_prob <= 1:
            raise BadSize("edge_prob must lie in [0, 1]")
        rng = random.Random(seed)
        pairs = [p for p in itertools.combinations(range(n), 2) if rng.random() < edge_prob]
        return graph_from_edges(range(n), pairs)
    raise BadSize(f"unknown topology {kind!r}")


def adjacency(g: PcnGraph) -> dict[NodeId, frozenset]:
    adj: dict = {v: set() for v in g}
    for e in g.edges:
        adj[e.tail].add(e.head)
        adj[e.head].add(e.tail)
    return {v: frozenset(ns) for v, ns in adj.items()}


def with_edges(adj: Adjacency, u: NodeId, neighbors: Iterable[NodeId]) -> dict:
    """Replace ``u``'s incident edges by edges to ``neighbors``."""
    new = set(neighbors)
    out = {}
    for v, ns in adj.items():
        if v == u:
            out[v] = frozenset(new)
        elif v in new:
            out[v] = ns | {u}
        else:
            out[v] = ns - {u}
    return out


# -- game utility --------------------------------------------------------------------


def _bfs(adj: Adjacency, root: NodeId):
    dist = {root: 0}
    sigma = {root: 1}
    pred: dict = {root: []}
    order = []
    queue = deque([root])
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                sigma[w] = 0
                pred[w] = []
                queue.append(w)
            if dist[w] == dist[v] + 1:
                sigma[w] += sigma[v]
                pred[w].append(v)
    return order, dist, sigma, pred


def _dependency(adj: Adjacency, source: NodeId, row: Mapping):
    order, dist, sigma, pred = _bfs(adj, source)
    node_share = dict.fromkeys(order, 0.0)
    edge_share: dict = {}
    for w in reversed(order):
        if w == source:
            continue
        per_path = (row.get(w, 0.0) + node_share[w]) / sigma[w]
        for v in pred[w]:
            c = sigma[v] * per_path
            edge_share[(v, w)] = edge_share.get((v, w), 0.0) + c
            node_share[v] += c
    node_share[source] = 0.0
    return node_share, edge_share, dist


def prob_row(adj: Adjacency, u: NodeId, s: float) -> dict:
    """``p_trans(u, .)`` with ``u`` and its edges removed before ranking."""
    degrees = {v: len(ns) - (u in ns) for v, ns in adj.items() if v != u}
    rf = rank_factors_from_degrees(degrees, s)
    total = sum(rf.values())
    return {v: x / total for v, x in rf.items()}


def prob_rows(adj: Adjacency, s: float) -> dict:
    return {u: prob_row(adj, u, s) for u in adj}


def game_terms(adj: Adjacency, u: NodeId, s: float) -> tuple[float, float]:
    """(forwarded share, expected hop count of own payments) for ``u``."""
    rows = prob_rows(adj, s)
    dist = _bfs(adj, u)[1]
    hops = 0.0
    for v, p in rows[u].items():
        if p <= 0:
            continue
        if v not in dist:
            return 0.0, INF
        hops += dist[v] * p
    forwarded = 0.0
    for src in sorted(adj, key=id_key):
        if src == u:
            continue
        node_share, _, _ = _dependency(adj, src, rows[src])
        forwarded += node_share.get(u, 0.0)
    return forwarded, hops


def _utility_adj(adj: Adjacency, u: NodeId, gp: GameParams) -> float:
    if not adj[u]:
        return -INF
    forwarded, hops = game_terms(adj, u, gp.s)
    if hops == INF:
        return -INF
    return gp.b * forwarded - gp.a * hops - gp.l * len(adj[u])


def game_utility(g: PcnGraph, u: NodeId, gp: GameParams) -> float:
    """Intermediary income minus own fees minus ``l`` per incident edge."""
    g.node(u)
    return _utility_adj(adjacency(g), u, gp)


# -- equilibrium ---------------------------------------------------------------------


def _snap(gain: float, scale: float) -> float:
    if math.isinf(gain) or math.isnan(gain):
        return gain
    return 0.0 if abs(gain) <= GAIN_RTOL * max(1.0, scale) else gain


def best_response_adj(adj: Adjacency, u: NodeId, gp: GameParams) -> DeviationReport:
    others = sorted((v for v in adj if v != u), key=id_key)
    current = frozenset(adj[u])
    current_value = _utility_adj(adj, u, gp)
    best, best_value = current, current_value
    for k in range(len(others) + 1):
        for combo in itertools.combinations(others, k):
            choice = frozenset(combo)
            if choice == current:
                continue
            value = _utility_adj(with_edges(adj, u, choice), u, gp)
            if value > best_value:
                best, best_value = choice, value
    if best_value == current_value:
        gain = 0.0
    elif current_value == -INF:
        gain = INF
    else:
        gain = _snap(best_value - current_value, max(abs(best_value), abs(current_value)))
    if gain == 0.0:
        best, best_value = current, current_value
    return DeviationReport(u, best, gain, gain > 0, current_value, best_value)


def best_response(g: PcnGraph, u: NodeId, gp: GameParams, max_n: int = 10) -> DeviationReport:
    """Exhaustive best response of ``u`` over all ``2^(n-1)`` neighbor sets."""
    g.node(u)
    if g.n > max_n:
        raise TooLarge(f"{g.n} nodes exceed max_n={max_n}")
    return best_response_adj(adjacency(g), u, gp)


def is_nash_equilibrium(g: PcnGraph, gp: GameParams, max_n: int = 10, *,
                        first_only: bool = False) -> NashReport:
    """Check every node's best response; ``first_only`` stops at the first profitable one."""
    if g.n > max_n:
        raise TooLarge(f"{g.n} nodes exceed max_n={max_n}")
    adj = adjacency(g)
    reports = []
    for u in sorted(adj, key=id_key):
        reports.append(best_response_adj(adj, u, gp))
        if first_only and reports[-1].is_profitable:
            break
    return NashReport(not any(r.is_profitable for r in reports), tuple(reports))


def deviation_gain(g: PcnGraph, u: NodeId, neighbors: Iterable[NodeId], gp: GameParams) -> float:
    """Utility change for ``u`` when its neighbor set becomes ``neighbors``."""
    adj = adjacency(g)
    before = _utility_adj(adj, u, gp)
    after = _utility_adj(with_edges(adj, u, neighbors), u, gp)
    if before == after:
        return 0.0
    if before == -INF:
        return INF
    return _snap(after - before, max(abs(after), abs(before)))


# -- closed-form star conditions -----------------------------------------------------


@dataclass(frozen=True)
class StarConditions:
    holds: bool
    c1: bool
    c2: bool
    c3: bool
    slacks: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "c3": self.c3, "slacks": list(self.slacks)}


def star_ne_conditions(gp: GameParams) -> StarConditions:
    """Sufficient conditions for a star with ``gp.n`` leaves to be stable.

    Each slack is ``rhs - lhs`` minimized over the index range; a range that
    is empty (fewer than three leaves) gives ``inf``.
    """
    n = gp.n
    if n is None or n < 2:
        raise BadSize("star conditions need n >= 2 leaves")
    a, b, l, s = gp.a, gp.b, gp.l, gp.s
    Hn = harmonic(n, s)
    half = 2.0 ** -s
    slack1 = (2.0 ** s) * l - a / Hn
    slack2 = slack3 = INF
    for i in range(2, n):
        Hi1 = harmonic(i + 1, s)
        lhs2 = b * (i / 2) * (Hi1 - 1 - half) / Hn + a * (Hi1 - 1) / Hn
        lhs3 = b * (i / 2) * (Hn - 1 - half) / Hn + a * (Hi1 - 2) / Hn
        slack2 = min(slack2, l * i - lhs2)
        slack3 = min(slack3, l * (i - 1) - lhs3)
    c1, c2, c3 = slack1 >= 0, slack2 >= 0, slack3 >= 0
    return StarConditions(c1 and c2 and c3, c1, c2, c3, (slack1, slack2, slack3))


# -- diameter bound ------------------------------------------------------------------


def diameter_bound(C: float, eps: float, lambda_e: float, f: float, p_min: float, N: float) -> float:
    """Longest stable shortest path through a hub, given the cost of a shortcut."""
    if p_min <= 0 or N <= 0 or f <= 0:
        raise PcnError("p_min, N and f must be > 0")
    if eps < 0:
        raise PcnError("eps must be >= 0")
    return 2 * (((C + eps) / 2 - lambda_e * f) / (p_min * N * f)) + 1


@dataclass(frozen=True)
class HubPathCheck:
    path: tuple
    hub: NodeId
    d: int
    lambda_e: float
    p_min: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.d <= self.bound


def _shortest_path(adj: Adjacency, x: NodeId, y: NodeId) -> list:
    _, dist, _, pred = _bfs(adj, x)
    path = [y]
    while path[-1] != x:
        path.append(min(pred[path[-1]], key=id_key))
    return path[::-1]


def hub_path_check(g: PcnGraph, gp: GameParams, *, eps: float = 0.0) -> HubPathCheck | None:
    """Measure the hub-path bound inputs on ``g`` and compare with its diameter.

    Picks the longest shortest path through a maximum-degree node, adds the
    shortcut around its midpoint, and reads off the shortcut's smaller
    directional transit rate (payments neither sent nor received by its
    endpoints) and the smallest probability of a pair straddling the
    midpoint. Per-node edge cost ``l`` plays the role of half the channel
    cost, and ``min(a, b)`` the fee per transaction with unit rate.
    Returns ``None`` when no hub lies on a path of length >= 2.
    """
    adj = adjacency(g)
    top = max(len(ns) for ns in adj.values())
    hubs = [v for v in sorted(adj, key=id_key) if len(adj[v]) == top]
    dists = {v: _bfs(adj, v)[1] for v in adj}
    best = None
    for h in hubs:
        for x in sorted(adj, key=id_key):
            for y in sorted(adj, key=id_key):
                if x == y or y not in dists[x] or h not in dists[x] or y not in dists[h]:
                    continue
                if dists[x][h] + dists[h][y] != dists[x][y]:
                    continue
                if best is None or dists[x][y] > best[0]:
                    best = (dists[x][y], x, y, h)
    if best is None or best[0] < 2:
        return None
    d, x, y, h = best
    path = _shortest_path(adj, x, h)[:-1] + _shortest_path(adj, h, y)
    mid = d // 2
    left, right = path[mid - 1], path[mid + 1]
    rows = prob_rows(adj, gp.s)
    p_min = min(
        min(rows[path[i]][path[j]], rows[path[j]][path[i]])
        for i in range(mid)
        for j in range(mid + 1, d + 1)
    )
    shortcut = dict(adj)
    shortcut[left] = adj[left] | {right}
    shortcut[right] = adj[right] | {left}
    new_rows = prob_rows(shortcut, gp.s)
    # only transit payments earn the endpoints a fee
    load = {(left, right): 0.0, (right, left): 0.0}
    for src in shortcut:
        if src in (left, right):
            continue
        row = {v: p for v, p in new_rows[src].items() if v not in (left, right)}
        _, edge_share, _ = _dependency(shortcut, src, row)
        for key in load:
            load[key] += edge_share.get(key, 0.0)
    lam = min(load.values())
    f = min(gp.a, gp.b)
    bound = diameter_bound(2 * gp.l, eps, lam, f, p_min, 1.0)
    return HubPathCheck(tuple(path), h, d, lam, p_min, bound)


# -- circle ---------------------------------------------------------------------------


def opposite_node_gain(n: int, gp: GameParams) -> float:
    """Gain for node 0 of ``circle(n)`` from adding an edge to its opposite node."""
    g = make_topology("circle", n)
    size = n + 1
    opposite = size // 2
    return deviation_gain(g, 0, {1, size - 1, opposite}, gp)


@dataclass(frozen=True)
class CircleScan:
    gains: dict = field(default_factory=dict)
    threshold: int | None = None  # smallest n with a strictly profitable shortcut
    persists: bool = False

    def to_dict(self) -> dict:
        return {"gains": self.gains, "threshold": self.threshold, "persists": self.persists}


def circle_instability(gp: GameParams, n_max: int = 20, n_min: int = 3) -> CircleScan:
    gains = {n: opposite_node_gain(n, gp) for n in range(n_min, n_max + 1)}
    threshold = next((n for n, g in gains.items() if g > 0), None)
    persists = threshold is not None and all(g > 0 for n, g in gains.items() if n >= threshold)
    return CircleScan(gains, threshold, persists)
