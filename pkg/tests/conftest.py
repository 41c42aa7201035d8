"""Shared generators and slow reference implementations used as oracles."""

from __future__ import annotations

import random
from collections import Counter

import pytest

from pcngame.graph import INF, Channel, Node, PcnGraph, reduced_subgraph


def random_channel_graph(rng: random.Random, n: int, p: float = 0.5, *, max_bal: int = 3,
                         parallel: bool = False, s_range=(0.0, 2.0), connected: bool = False) -> PcnGraph:
    nodes = [Node(i, rng.choice([1.0, 2.0, 5.0]), round(rng.uniform(*s_range), 3)) for i in range(n)]
    chans = []
    if connected:
        order = list(range(n))
        rng.shuffle(order)
        for i in range(1, n):
            a, b = order[i], order[rng.randrange(i)]
            chans.append(Channel(a, b, rng.randint(0, max_bal), rng.randint(0, max_bal)))
    for a in range(n):
        for b in range(a + 1, n):
            copies = rng.randint(1, 2) if parallel else 1
            for _ in range(copies):
                if rng.random() < p:
                    chans.append(Channel(a, b, rng.randint(0, max_bal), rng.randint(0, max_bal)))
    return PcnGraph(nodes, chans)


def random_digraph(rng: random.Random, n: int) -> PcnGraph:
    """Arbitrary digraph (possibly with parallel arcs) via a capacity filter."""
    g = random_channel_graph(rng, n, rng.uniform(0.2, 0.9), max_bal=1, parallel=True)
    return reduced_subgraph(g, 1)


def naive_paths(g: PcnGraph, s, r) -> list[tuple]:
    """All simple s->r paths as edge tuples, by exhaustive DFS."""
    out = []

    def walk(v, seen, path):
        if v == r:
            out.append(tuple(path))
            return
        for e in g.edges:
            if e.tail == v and e.head not in seen:
                seen.add(e.head)
                path.append(e)
                walk(e.head, seen, path)
                path.pop()
                seen.discard(e.head)

    walk(s, {s}, [])
    return out


def paths_of_length(g: PcnGraph, s, r, k: int) -> list[tuple]:
    """All simple s->r paths with exactly ``k`` edges."""
    out = []

    def walk(v, seen, path):
        if len(path) == k:
            if v == r:
                out.append(tuple(path))
            return
        for e in g.edges:
            if e.tail == v and e.head not in seen:
                seen.add(e.head)
                path.append(e)
                walk(e.head, seen, path)
                path.pop()
                seen.discard(e.head)

    walk(s, {s}, [])
    return out


def naive_shortest(g: PcnGraph, s, r):
    """(distance, count, per-edge counts) by enumerating paths of growing length."""
    for k in range(1, g.n):
        shortest = paths_of_length(g, s, r, k)
        if shortest:
            per_edge = Counter(e for p in shortest for e in p)
            return k, len(shortest), dict(per_edge)
    return INF, 0, {}


def naive_probs(g: PcnGraph, u, s: float) -> dict:
    """Transaction probabilities from an explicit rank list."""
    others = [v for v in g.node_ids if v != u]
    indeg = {v: sum(1 for e in g.edges if e.head == v and e.tail != u) for v in others}
    ranked = sorted(others, key=lambda v: -indeg[v])
    weight = {}
    pos = 0
    while pos < len(ranked):
        end = pos
        while end < len(ranked) and indeg[ranked[end]] == indeg[ranked[pos]]:
            end += 1
        ranks = range(pos + 1, end + 1)
        avg = sum(k ** -s for k in ranks) / len(ranks)
        for v in ranked[pos:end]:
            weight[v] = avg
        pos = end
    total = sum(weight.values())
    return {v: w / total for v, w in weight.items()}


def naive_edge_p(g: PcnGraph, s_of=None) -> dict:
    """Sum over pairs of probability times the fraction of shortest paths on each edge."""
    p = {e: 0.0 for e in g.edges}
    for s in g:
        probs = naive_probs(g, s, g.node(s).zipf_s if s_of is None else s_of)
        for r in g:
            if r == s:
                continue
            _, count, per_edge = naive_shortest(g, s, r)
            if count == 0:
                continue
            for e, c in per_edge.items():
                p[e] += probs[r] * c / count
    return p


def naive_forwarding(g: PcnGraph, u) -> float:
    total = 0.0
    for s in g:
        if s == u:
            continue
        probs = naive_probs(g, s, g.node(s).zipf_s)
        for r in g:
            if r in (s, u):
                continue
            paths = naive_paths(g, s, r)
            if not paths:
                continue
            d = min(len(p) for p in paths)
            shortest = [p for p in paths if len(p) == d]
            through = sum(1 for p in shortest if any(e.head == u for e in p))
            total += probs[r] * through / len(shortest)
    return total


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    mod = terminalreporter.config.pluginmanager.get_plugin("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        import sys
        lines = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
