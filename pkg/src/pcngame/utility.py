"""Utility of a node joining the network: revenue, fees and channel costs.

Two demand models are supported. By default every node draws receivers
from the degree-ranked Zipf distribution. Alternatively an explicit list of
``Demand`` streams can be given; each stream is routed on the subgraph of
edges able to carry its transaction size.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .errors import BudgetExceeded, GraphFormatError, PcnError, UnknownNode
from .graph import (
    INF,
    Channel,
    NodeId,
    PcnGraph,
    bfs_tree,
    distances_from,
    exact,
    reduced_subgraph,
)
from .txmodel import (
    TransProbMatrix,
    edge_rates,
    forwarding_probability,
    rank_factors,
    total_rate,
    trans_prob_matrix,
)

FEE_HOPS = ("distance", "intermediaries")
PEER_LOCK_MODES = ("zero", "symmetric")


@dataclass(frozen=True)
class GlobalParams:
    """Economic constants shared by all users.

    ``T`` is the transaction size used to filter edges before routing
    (0 keeps every edge). ``N`` is the network transaction rate; when unset
    it is the sum of ``n_tx`` over the evaluated graph.
    """

    f_avg: float = 1.0
    f_avg_T: float = 1.0
    C: float = 1.0
    r: float = 0.0
    T: float = 0.0
    N: float | None = None
    fee_hops: str = "distance"
    peer_lock_mode: str = "zero"

    def __post_init__(self) -> None:
        for name in ("f_avg", "f_avg_T", "C", "r", "T", "N"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise PcnError(f"{name} must be >= 0, got {value}")
        if self.fee_hops not in FEE_HOPS:
            raise PcnError(f"fee_hops must be one of {FEE_HOPS}")
        if self.peer_lock_mode not in PEER_LOCK_MODES:
            raise PcnError(f"peer_lock_mode must be one of {PEER_LOCK_MODES}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GlobalParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise GraphFormatError(f"config: unknown field(s) {sorted(unknown)}")
        for key, value in data.items():
            if key in ("fee_hops", "peer_lock_mode"):
                continue
            if value is None and key == "N":
                continue
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise GraphFormatError(f"config.{key}: expected number, got {value!r}")
            if value < 0:
                raise GraphFormatError(f"config.{key}: must be >= 0")
        try:
            return cls(**data)
        except PcnError as exc:
            raise GraphFormatError(f"config: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Action:
    peer: NodeId
    lock: Any

    def __post_init__(self) -> None:
        if self.lock < 0:
            raise PcnError(f"lock must be >= 0, got {self.lock}")


Strategy = tuple  # tuple[Action, ...]; order only affects channel ids


@dataclass(frozen=True)
class Demand:
    """A stream of ``rate`` transactions per unit time of ``size`` coins."""

    src: NodeId
    dst: NodeId
    rate: float
    size: Any = 0


@dataclass(frozen=True)
class UtilityBreakdown:
    revenue: float
    fees: float
    channel_cost: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


def channel_cost(params: GlobalParams, lock: Any) -> float:
    """On-chain cost plus opportunity cost of the locked funds."""
    if lock < 0:
        raise PcnError("lock must be >= 0")
    return params.C + params.r * float(lock)


def strategy_outlay(strategy: Iterable[Action], params: GlobalParams) -> Fraction:
    """Exact coins needed to open every channel in ``strategy``."""
    return sum((exact(params.C) + exact(a.lock) for a in strategy), Fraction(0))


def is_feasible(strategy: Iterable[Action], params: GlobalParams, budget: Any) -> bool:
    return strategy_outlay(strategy, params) <= exact(budget)


def augment(g: PcnGraph, u: NodeId, strategy: Sequence[Action], params: GlobalParams) -> PcnGraph:
    """Graph with ``u``'s strategy channels opened."""
    g.node(u)
    channels = list(g.channels)
    for i, act in enumerate(strategy):
        if act.peer == u:
            raise PcnError(f"{u!r} cannot open a channel with itself")
        g.node(act.peer)
        peer_side = act.lock if params.peer_lock_mode == "symmetric" else 0
        channels.append(Channel(u, act.peer, act.lock, peer_side, f"{u}~{act.peer}#{i}"))
    return PcnGraph(g.nodes, channels)


def _hops(d: float, params: GlobalParams) -> float:
    return d if params.fee_hops == "distance" else d - 1


def _network_rate(g: PcnGraph, params: GlobalParams) -> float:
    return total_rate(g) if params.N is None else float(params.N)


# -- Zipf demand ---------------------------------------------------------------


def expected_revenue(g: PcnGraph, u: NodeId, probs: TransProbMatrix, params: GlobalParams) -> float:
    """Routing-fee income of ``u`` from transactions it forwards."""
    return params.f_avg * _network_rate(g, params) * forwarding_probability(g, probs, u)


def fees_from_row(
    g: PcnGraph, u: NodeId, row: Mapping[NodeId, float], params: GlobalParams
) -> float:
    dist = distances_from(g, u)
    total = 0.0
    for v, p in row.items():
        if p <= 0:
            continue
        if dist[v] == INF:
            return INF
        total += _hops(dist[v], params) * p
    return g.node(u).n_tx * params.f_avg_T * total


def expected_fees(g: PcnGraph, u: NodeId, probs: TransProbMatrix, params: GlobalParams) -> float:
    """Fees ``u`` pays per unit time; ``inf`` if a likely receiver is unreachable."""
    g.node(u)
    return fees_from_row(g, u, probs.row(u), params)


# -- explicit demand -----------------------------------------------------------


def _traffic_terms(g: PcnGraph, u: NodeId, traffic: Sequence[Demand], params: GlobalParams):
    revenue = 0.0
    fees = 0.0
    by_size: dict = {}
    for d in traffic:
        if d.src == d.dst:
            raise PcnError(f"demand {d.src!r}->{d.dst!r} has identical endpoints")
        if d.src not in g or d.dst not in g:
            raise UnknownNode(f"demand {d.src!r}->{d.dst!r} names an unknown node")
        sub = by_size.get(d.size)
        if sub is None:
            sub = by_size[d.size] = reduced_subgraph(g, d.size)
        fwd = bfs_tree(sub, d.src)
        if d.dst not in fwd.dist:
            if d.src == u:
                fees = INF
            continue
        if d.src == u:
            fees += d.rate * params.f_avg_T * _hops(fwd.dist[d.dst], params)
        elif d.dst != u and u in fwd.dist:
            back = bfs_tree(sub, d.dst, reverse=True)
            if u in back.dist and fwd.dist[u] + back.dist[u] == fwd.dist[d.dst]:
                share = fwd.sigma[u] * back.sigma[u] / fwd.sigma[d.dst]
                revenue += d.rate * params.f_avg * share
    return revenue, fees


# -- full evaluation -----------------------------------------------------------


def _check_strategy(g: PcnGraph, u: NodeId, strategy: Sequence[Action]) -> None:
    g.node(u)
    for act in strategy:
        if act.peer == u:
            raise PcnError(f"{u!r} cannot open a channel with itself")
        g.node(act.peer)


def evaluate(
    g: PcnGraph,
    u: NodeId,
    strategy: Sequence[Action],
    params: GlobalParams,
    *,
    traffic: Sequence[Demand] | None = None,
) -> UtilityBreakdown:
    """Materialize the strategy and compute every utility component."""
    strategy = tuple(strategy)
    _check_strategy(g, u, strategy)
    cost = sum(channel_cost(params, a.lock) for a in strategy)
    full = augment(g, u, strategy, params)
    if not full.out_edges(u) and not full.in_edges(u):
        return UtilityBreakdown(0.0, INF, cost, -INF)
    if traffic is not None:
        revenue, fees = _traffic_terms(full, u, traffic, params)
    else:
        h = reduced_subgraph(full, params.T)
        probs = trans_prob_matrix(h)
        fees = expected_fees(h, u, probs, params)
        revenue = expected_revenue(h, u, probs, params)
    total = -INF if fees == INF else revenue - fees - cost
    return UtilityBreakdown(revenue, fees, cost, total)


def utility(
    g: PcnGraph,
    u: NodeId,
    strategy: Sequence[Action],
    params: GlobalParams,
    *,
    budget: Any = None,
    traffic: Sequence[Demand] | None = None,
) -> UtilityBreakdown:
    strategy = tuple(strategy)
    if budget is not None and not is_feasible(strategy, params, budget):
        raise BudgetExceeded(
            f"strategy needs {float(strategy_outlay(strategy, params))} coins, budget is {budget}"
        )
    return evaluate(g, u, strategy, params, traffic=traffic)


def simplified_utility(g, u, strategy, params, *, budget=None, traffic=None) -> float:
    """Revenue minus fees, ignoring channel costs."""
    b = utility(g, u, strategy, params, budget=budget, traffic=traffic)
    return -INF if b.fees == INF else b.revenue - b.fees


def onchain_cost(g: PcnGraph, u: NodeId, params: GlobalParams) -> float:
    """What ``u`` would pay transacting purely on-chain."""
    return g.node(u).n_tx * params.C / 2


def benefit(g, u, strategy, params, *, budget=None, traffic=None) -> float:
    return onchain_cost(g, u, params) + utility(
        g, u, strategy, params, budget=budget, traffic=traffic
    ).total


# -- frozen-rate variant ---------------------------------------------------------


class FixedRateModel:
    """Utility with every channel's rate and every probability held fixed.

    Each action ``(x, l)`` earns ``lambda_(x,u) * f_avg``, the rate on the
    channel's ``x -> u`` direction measured once on the graph where it is the
    only channel ``u`` opens; fees use ``u``'s receiver distribution on ``g``.
    Revenue is then additive and only the distances change with the
    strategy, which makes the resulting set function submodular.
    """

    def __init__(self, g: PcnGraph, u: NodeId, params: GlobalParams):
        self.g = g
        self.u = u
        self.params = params
        self.row = rank_factors(g, u, g.node(u).zipf_s)
        self._revenue: dict = {}

    def action_revenue(self, act: Action) -> float:
        if act not in self._revenue:
            h = reduced_subgraph(augment(self.g, self.u, (act,), self.params), self.params.T)
            rates = edge_rates(h, trans_prob_matrix(h), _network_rate(h, self.params))
            new_id = f"{self.u}~{act.peer}#0"
            inbound = sum(rates.rate(e) for e in h.in_edges(self.u) if e.channel_id == new_id)
            self._revenue[act] = self.params.f_avg * inbound
        return self._revenue[act]

    def breakdown(self, strategy: Sequence[Action]) -> UtilityBreakdown:
        strategy = tuple(strategy)
        _check_strategy(self.g, self.u, strategy)
        cost = sum(channel_cost(self.params, a.lock) for a in strategy)
        revenue = sum(self.action_revenue(a) for a in strategy)
        if not strategy and not self.g.neighbors(self.u):
            return UtilityBreakdown(revenue, INF, cost, -INF)
        h = reduced_subgraph(augment(self.g, self.u, strategy, self.params), self.params.T)
        row = {v: rf / self.row.normalizer for v, rf in self.row.factors.items()}
        fees = fees_from_row(h, self.u, row, self.params)
        total = -INF if fees == INF else revenue - fees - cost
        return UtilityBreakdown(revenue, fees, cost, total)

    def utility(self, strategy: Sequence[Action]) -> float:
        return self.breakdown(strategy).total

    def simplified(self, strategy: Sequence[Action]) -> float:
        b = self.breakdown(strategy)
        return -INF if b.fees == INF else b.revenue - b.fees


def traffic_from_list(raw: Any) -> tuple[Demand, ...]:
    if not isinstance(raw, list):
        raise GraphFormatError("traffic: expected a list")
    out = []
    for i, item in enumerate(raw):
        where = f"traffic[{i}]"
        if not isinstance(item, Mapping):
            raise GraphFormatError(f"{where}: expected an object")
        for key in ("src", "dst", "rate"):
            if key not in item:
                raise GraphFormatError(f"{where}: missing field '{key}'")
        rate = item["rate"]
        size = item.get("size", 0)
        for key, val in (("rate", rate), ("size", size)):
            if not isinstance(val, (int, float)) or isinstance(val, bool) or val < 0:
                raise GraphFormatError(f"{where}.{key}: expected a number >= 0")
        out.append(Demand(item["src"], item["dst"], float(rate), size))
    return tuple(out)


def is_finite(x: float) -> bool:
    return not math.isinf(x)
