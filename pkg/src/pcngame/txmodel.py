"""Degree-ranked (modified Zipf) transaction distribution and edge rates."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterator

from .errors import SameNode, SingletonGraph, UnknownNode
from .graph import Edge, NodeId, PcnGraph, bfs_tree, id_key


@dataclass(frozen=True)
class RankFactorTable:
    observer: NodeId
    s: float
    factors: Mapping[NodeId, float]
    normalizer: float

    def prob(self, v: NodeId) -> float:
        return self.factors[v] / self.normalizer


def zipf_group_factor(first_rank: int, size: int, s: float) -> float:
    """Mean Zipf weight over ranks ``first_rank .. first_rank + size - 1``."""
    if s == 0:
        return 1.0
    return sum(r ** -s for r in range(first_rank, first_rank + size)) / size


def rank_factors_from_degrees(degrees: Mapping[NodeId, int], s: float) -> dict[NodeId, float]:
    """Tie-averaged Zipf weights for nodes ranked by descending degree."""
    by_degree: dict[int, list] = {}
    for v, d in degrees.items():
        by_degree.setdefault(d, []).append(v)
    factors = {}
    rank = 1
    for d in sorted(by_degree, reverse=True):
        group = by_degree[d]
        rf = zipf_group_factor(rank, len(group), s)
        for v in group:
            factors[v] = rf
        rank += len(group)
    return factors


def observer_in_degrees(g: PcnGraph, observer: NodeId) -> dict[NodeId, int]:
    """In-degrees after deleting ``observer`` and its incident edges."""
    deg = {v: 0 for v in g if v != observer}
    for e in g.edges:
        if e.tail != observer and e.head != observer:
            deg[e.head] += 1
    return deg


def rank_factors(g: PcnGraph, observer: NodeId, s: float) -> RankFactorTable:
    g.node(observer)
    if g.n < 2:
        raise SingletonGraph("rank factors need at least two nodes")
    factors = rank_factors_from_degrees(observer_in_degrees(g, observer), s)
    return RankFactorTable(observer, s, factors, sum(factors.values()))


def trans_prob(g: PcnGraph, u: NodeId, v: NodeId) -> float:
    """Probability that ``u`` addresses a given transaction to ``v``."""
    if u == v:
        raise SameNode(f"{u!r} cannot transact with itself")
    g.node(v)
    table = rank_factors(g, u, g.node(u).zipf_s)
    return table.prob(v)


class TransProbMatrix(Mapping):
    """Row-stochastic map ``(u, v) -> p_trans``; rows are kept per sender."""

    def __init__(self, rows: Mapping[NodeId, Mapping[NodeId, float]]):
        self._rows = {u: dict(row) for u, row in rows.items()}

    def row(self, u: NodeId) -> dict[NodeId, float]:
        try:
            return self._rows[u]
        except KeyError:
            raise UnknownNode(f"no probability row for {u!r}") from None

    def __getitem__(self, pair: tuple) -> float:
        u, v = pair
        return self._rows[u][v]

    def __iter__(self) -> Iterator[tuple]:
        for u, row in self._rows.items():
            for v in row:
                yield (u, v)

    def __len__(self) -> int:
        return sum(len(row) for row in self._rows.values())

    @property
    def senders(self) -> tuple:
        return tuple(self._rows)


def trans_prob_matrix(g: PcnGraph, s: float | None = None) -> TransProbMatrix:
    """Probabilities for every ordered pair.

    Each sender uses its own ``zipf_s`` unless ``s`` overrides it for all.
    """
    if g.n < 2:
        raise SingletonGraph("rank factors need at least two nodes")
    rows = {}
    for u in g:
        table = rank_factors(g, u, g.node(u).zipf_s if s is None else s)
        rows[u] = {v: rf / table.normalizer for v, rf in table.factors.items()}
    return TransProbMatrix(rows)


# -- edge rates ----------------------------------------------------------------


@dataclass(frozen=True)
class EdgeRateTable:
    p: Mapping[Edge, float]
    total_tx_rate: float
    nodes: frozenset

    def rate(self, e: Edge) -> float:
        return self.total_tx_rate * self.p.get(e, 0.0)

    @property
    def rates(self) -> dict[Edge, float]:
        return {e: self.total_tx_rate * pe for e, pe in self.p.items()}


def dependencies(g: PcnGraph, source: NodeId, row: Mapping[NodeId, float]):
    """Probability-weighted Brandes accumulation from one source.

    Returns ``(edge_share, node_share)`` where ``edge_share[e]`` is the
    expected number of times a transaction sent by ``source`` (target drawn
    from ``row``) crosses ``e``, split evenly over equal-length paths, and
    ``node_share[v]`` is the probability that it is forwarded by ``v``.
    """
    tree = bfs_tree(g, source)
    sigma = tree.sigma
    node_share = dict.fromkeys(tree.order, 0.0)
    edge_share: dict[Edge, float] = {}
    for w in reversed(tree.order):
        if w == source:
            continue
        flow = row.get(w, 0.0) + node_share[w]
        if flow == 0.0:
            continue
        per_path = flow / sigma[w]
        for e in tree.pred[w]:
            c = sigma[e.tail] * per_path
            edge_share[e] = edge_share.get(e, 0.0) + c
            node_share[e.tail] += c
    node_share[source] = 0.0
    return edge_share, node_share


def total_rate(g: PcnGraph) -> float:
    return float(sum(v.n_tx for v in g.nodes))


def edge_rates(g: PcnGraph, probs: TransProbMatrix, N: float | None = None) -> EdgeRateTable:
    """``p_e`` for every directed edge and ``lambda_e = N * p_e``."""
    if N is None:
        N = total_rate(g)
    p = dict.fromkeys(g.edges, 0.0)
    for s in g:
        shares, _ = dependencies(g, s, probs.row(s))
        for e, c in shares.items():
            p[e] += c
    return EdgeRateTable(p, float(N), frozenset(g.node_ids))


def node_flow_rate(rates: EdgeRateTable, u: NodeId) -> float:
    """Total rate over every directed edge incident to ``u``."""
    if u not in rates.nodes:
        raise UnknownNode(f"unknown node {u!r}")
    return sum(
        rates.total_tx_rate * pe for e, pe in rates.p.items() if e.tail == u or e.head == u
    )


def forwarding_probability(g: PcnGraph, probs: TransProbMatrix, u: NodeId) -> float:
    """Expected number of transactions ``u`` forwards per transaction sent network-wide.

    Sums, over senders ``s != u`` and receivers ``r != u``, the fraction of
    shortest ``s -> r`` paths through ``u`` weighted by ``p_trans(s, r)``.
    """
    g.node(u)
    total = 0.0
    for s in sorted(g, key=id_key):
        if s == u:
            continue
        _, node_share = dependencies(g, s, probs.row(s))
        total += node_share.get(u, 0.0)
    return total
