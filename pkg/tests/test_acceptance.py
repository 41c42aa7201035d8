"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines are repeated in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import math
import random
import time

import networkx as nx
import pytest

from pcngame.attach import (
    AttachProblem,
    ObjectiveKind,
    brute_force_oracle,
    continuous_local_search,
    exhaustive_discrete,
    greedy_fixed,
    max_channels,
    positive_candidates,
)
from pcngame.equilibrium import (
    GameParams,
    circle_instability,
    deviation_gain,
    graph_from_edges,
    harmonic,
    hub_path_check,
    is_nash_equilibrium,
    make_topology,
    star_ne_conditions,
)
from pcngame.graph import INF, Channel, Node, PcnGraph, all_pairs_path_stats
from pcngame.txmodel import observer_in_degrees, rank_factors, trans_prob_matrix
from pcngame.utility import Action, Demand, FixedRateModel, GlobalParams

from conftest import naive_shortest, random_channel_graph, random_digraph

RESULTS: list[str] = []


def report(k: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _gain(new: float, old: float) -> float:
    if old == -INF:
        return INF if new > -INF else 0.0
    return new - old


# -- 1. submodularity of U under fixed rates -------------------------------------


def test_criterion_01_submodularity():
    rng = random.Random(101)
    start = time.perf_counter()
    violations = checks = 0
    non_monotone = negative = 0
    for _ in range(200):
        n = rng.randint(2, 5)
        g = random_channel_graph(rng, n, rng.uniform(0.3, 0.8), connected=True)
        g = g.with_node(Node("u", rng.choice([0.5, 1.0, 2.0, 5.0])))
        params = GlobalParams(C=rng.choice([0.5, 1, 2, 5]), r=rng.choice([0, 0.05, 0.2, 1]))
        model = FixedRateModel(g, "u", params)
        pool = [Action(v, l) for v in range(n) for l in (1, 2, 3)]
        omega = rng.sample(pool, min(len(pool), rng.randint(2, 5)))
        U = {
            frozenset(S): model.utility(S)
            for r in range(len(omega) + 1)
            for S in itertools.combinations(omega, r)
        }
        for T, uT in U.items():
            for S, uS in U.items():
                if not S <= T:
                    continue
                for x in omega:
                    if x in T:
                        continue
                    checks += 1
                    if _gain(U[S | {x}], uS) < _gain(U[T | {x}], uT) - 1e-9:
                        violations += 1
                    if S and U[S | {x}] < uS:
                        non_monotone += 1
        negative += sum(1 for v in U.values() if -INF < v < 0)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and non_monotone > 0 and negative > 0 and elapsed < 60
    report(1, ok, f"{violations} violations in {checks} checks over 200 instances, "
                  f"{non_monotone} non-monotone and {negative} negative witnesses, {elapsed:.1f}s")


# -- 2 / 3. greedy ratio and exhaustive dominance ---------------------------------


def _greedy_instances(seed: int, count: int = 100):
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.randint(3, 6)
        g = random_channel_graph(rng, n, rng.uniform(0.3, 0.8), connected=True)
        C = rng.choice([1, 2])
        budget = rng.randint(C + 1, 12)
        cands = tuple(sorted(rng.sample(range(n), rng.randint(2, n))))
        joiner = Node("u", rng.choice([0.1, 0.2, 0.5, 1.0]))
        yield AttachProblem(g, joiner, budget, GlobalParams(C=C, r=0.05),
                            candidates=cands, fixed_rates=True)


def test_criterion_02_greedy_ratio():
    start = time.perf_counter()
    failures = runs = 0
    worst = math.inf
    for p in _greedy_instances(202):
        for l1 in range(1, p.budget - p.params.C + 1):
            gr = greedy_fixed(p, l1)
            M = min(max_channels(p, l1), len(p.peers))
            opt = brute_force_oracle(p, [Action(v, l1) for v in p.peers], "U'", max_size=M)
            runs += 1
            if gr.objective_value < (1 - 1 / math.e) * opt.objective_value - 1e-9:
                failures += 1
            if opt.objective_value > 0:
                worst = min(worst, gr.objective_value / opt.objective_value)
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 120
    report(2, ok, f"{failures} of {runs} greedy runs below (1-1/e)*OPT on 100 instances, "
                  f"worst ratio {worst:.4f}, {elapsed:.1f}s")


def test_criterion_03_exhaustive_dominance():
    failures = runs = 0
    for p in _greedy_instances(202):
        m = max(1, math.ceil(p.budget / 6))
        ex = exhaustive_discrete(p, m)
        for l1 in range(m, p.budget - p.params.C + 1, m):
            runs += 1
            if not ex.objective_value >= greedy_fixed(p, l1).objective_value:
                failures += 1
    report(3, failures == 0, f"{failures} of {runs} greedy lock levels beat the exhaustive search")


# -- 4. continuous local search ---------------------------------------------------


def test_criterion_04_continuous_ratio():
    rng = random.Random(404)
    failures = found = tries = 0
    worst = math.inf
    levels = (1, 3)
    while found < 50:
        tries += 1
        n = rng.randint(2, 4)
        g = random_channel_graph(rng, n, rng.uniform(0.3, 0.8), connected=True)
        p = AttachProblem(g, Node("u", rng.choice([10.0, 20.0, 40.0])), rng.choice([20, 30]),
                          GlobalParams(C=10, r=0.05), fixed_rates=True)
        acts = [Action(v, l) for v in range(n) for l in levels]
        if not positive_candidates(p, acts):
            continue
        found += 1
        ls = continuous_local_search(p, 0.1, lock_levels=levels)
        opt = brute_force_oracle(p, acts, ObjectiveKind.BENEFIT)
        if ls.objective_value < opt.objective_value / 5 - 1e-9:
            failures += 1
        worst = min(worst, ls.objective_value / opt.objective_value)
    report(4, failures == 0, f"{failures} of {found} positive instances below OPT/5 "
                             f"({tries} drawn), worst ratio {worst:.4f}")


# -- 5. the two-channel example --------------------------------------------------------


def _example_problem() -> AttachProblem:
    g = PcnGraph([Node(x) for x in "ABCD"],
                 [Channel("A", "B", 100, 100), Channel("B", "C", 100, 100),
                  Channel("C", "D", 100, 100)])
    params = GlobalParams(f_avg=1, f_avg_T=1, C=1, r=0.01, peer_lock_mode="symmetric")
    traffic = (Demand("A", "D", 9, 9), Demand("E", "B", 1, 10))
    return AttachProblem(g, Node("E"), 21, params, traffic=traffic)


def test_criterion_05_two_channel_example():
    p = _example_problem()
    space = [Action(v, l) for v in "ABCD" for l in (1, 5, 9, 10, 14)]
    brute = brute_force_oracle(p, space)
    brute_ok = set(brute.strategy) == {Action("A", 10), Action("D", 9)}
    ex = exhaustive_discrete(p, 1)
    ex_ok = {a.peer for a in ex.strategy} == {"A", "D"}
    greedy_sets = {}
    for l1 in range(1, 21):
        r = greedy_fixed(p, l1)
        greedy_sets[l1] = "".join(sorted(a.peer for a in r.strategy))
    greedy_ok = any(s == "AD" for s in greedy_sets.values())
    chosen = sorted(set(greedy_sets.values()))
    report(5, brute_ok and ex_ok and greedy_ok,
           f"brute force {sorted((a.peer, a.lock) for a in brute.strategy)}, "
           f"exhaustive peers {sorted(a.peer for a in ex.strategy)}, "
           f"greedy peer sets over locks 1..20: {chosen}")


# -- 6-9. equilibria of simple topologies -------------------------------------------


def test_criterion_06_biased_star():
    failures = runs = 0
    for n in (4, 5, 6):
        H = harmonic(n, 30.0)
        for l in (0.5, 1.0, 2.0):
            for fa, fb in itertools.product((0.0, 0.5, 1.0), repeat=2):
                gp = GameParams(fa * l * H, fb * l * H, l, 30.0)
                runs += 1
                if not is_nash_equilibrium(make_topology("star", n), gp).is_ne:
                    failures += 1
    report(6, failures == 0, f"{runs - failures} of {runs} biased stars are equilibria")


def test_criterion_07_star_conditions():
    rng = random.Random(707)
    points = counter = 0
    examples = []
    while points < 100:
        n = rng.randint(2, 7)
        gp = GameParams(rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0.05, 2),
                        rng.uniform(0, 4), n=n)
        if not star_ne_conditions(gp).holds:
            continue
        points += 1
        if not is_nash_equilibrium(make_topology("star", n), gp, first_only=True).is_ne:
            counter += 1
            if len(examples) < 2:
                examples.append(f"n={n} a={gp.a:.2f} b={gp.b:.2f} l={gp.l:.2f} s={gp.s:.2f}")
    detail = f"{counter} counterexamples in {points} points satisfying the conditions"
    if examples:
        detail += " (e.g. " + "; ".join(examples) + ")"
    report(7, counter == 0, detail)


def test_criterion_08_path_never_stable():
    rng = random.Random(808)
    stable_by_n = {}
    no_reattach_by_n = {}
    for n in range(3, 9):
        stable = no_reattach = 0
        for _ in range(20):
            gp = GameParams(rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0.05, 2),
                            rng.uniform(0, 3))
            g = make_topology("path", n)
            if is_nash_equilibrium(g, gp, first_only=True).is_ne:
                stable += 1
            # an endpoint drops its edge and attaches to some other node instead
            moves = [deviation_gain(g, end, {v}, gp)
                     for end, nb in ((0, 1), (n - 1, n - 2))
                     for v in range(n) if v not in (end, nb)]
            if not any(x > 0 for x in moves):
                no_reattach += 1
        stable_by_n[n], no_reattach_by_n[n] = stable, no_reattach
    ok = not any(stable_by_n.values()) and not any(no_reattach_by_n.values())
    report(8, ok, f"stable paths per n {stable_by_n}, points without a profitable "
                  f"endpoint reattachment per n {no_reattach_by_n}")


def test_criterion_09_circle_instability():
    grid = [GameParams(a, b, l, s) for a, b, l, s in
            itertools.product((0.5, 1, 2), (0.5, 1, 2), (0.5, 1, 2), (0, 1, 2))]
    thresholds = {}
    broken = []
    for gp in grid:
        scan = circle_instability(gp, n_max=20)
        thresholds[scan.threshold] = thresholds.get(scan.threshold, 0) + 1
        if scan.threshold is None or not scan.persists:
            dips = [n for n, x in scan.gains.items() if scan.threshold and n > scan.threshold and x <= 0]
            broken.append(f"a={gp.a} b={gp.b} l={gp.l} s={gp.s} first at {scan.threshold}, "
                          f"not profitable at {dips}")
    detail = (f"first profitable size counts {dict(sorted(thresholds.items(), key=lambda kv: (kv[0] is None, kv[0] or 0)))} "
              f"over {len(grid)} points; {len(broken)} points where it does not persist")
    if broken:
        detail += f" (e.g. {broken[0]})"
    report(9, not broken, detail)


# -- 10 / 11. model invariants -----------------------------------------------------


def test_criterion_10_path_stats():
    rng = random.Random(1010)
    mismatches = pairs = 0
    for _ in range(500):
        g = random_digraph(rng, rng.randint(2, 8))
        for (s, r), ps in all_pairs_path_stats(g).items():
            pairs += 1
            if (ps.distance, ps.path_count, dict(ps.per_edge_counts)) != naive_shortest(g, s, r):
                mismatches += 1
    report(10, mismatches == 0, f"{mismatches} mismatches over {pairs} ordered pairs in 500 digraphs")


def test_criterion_11_distribution_invariants():
    rng = random.Random(1111)
    worst_row = 0.0
    order_bad = uniform_bad = 0
    for _ in range(500):
        g = random_channel_graph(rng, rng.randint(2, 8), rng.random(), parallel=rng.random() < 0.5)
        probs = trans_prob_matrix(g)
        for u in g:
            worst_row = max(worst_row, abs(math.fsum(probs.row(u).values()) - 1.0))
            s = g.node(u).zipf_s
            deg = observer_in_degrees(g, u)
            rf = rank_factors(g, u, s).factors
            for v, w in itertools.permutations(deg, 2):
                if deg[v] > deg[w] and not (rf[v] > rf[w] or s == 0):
                    order_bad += 1
                if deg[v] == deg[w] and rf[v] != rf[w]:
                    order_bad += 1
        flat = trans_prob_matrix(g, s=0.0)
        for u in g:
            if any(p != 1.0 / (g.n - 1) for p in flat.row(u).values()):
                uniform_bad += 1
    ok = worst_row <= 1e-12 and order_bad == 0 and uniform_bad == 0
    report(11, ok, f"max row-sum error {worst_row:.1e}, {order_bad} rank-order violations, "
                   f"{uniform_bad} non-uniform rows at s=0 over 500 graphs")


# -- 12. diameter bound on small stable graphs ---------------------------------------


def test_criterion_12_diameter_bound():
    grid = [GameParams(a, b, l, s)
            for a in (0.5, 1, 2) for b in (0.5, 1, 2) for l in (0.25, 1, 3) for s in (0, 1, 2)]
    atlas = [G for G in nx.graph_atlas_g() if 2 <= G.number_of_nodes() <= 6 and nx.is_connected(G)]
    stable = applicable = 0
    violations = []
    for gp in grid:
        for G in atlas:
            g = graph_from_edges(G.nodes, G.edges)
            if not is_nash_equilibrium(g, gp, first_only=True).is_ne:
                continue
            stable += 1
            check = hub_path_check(g, gp)
            if check is None:
                continue
            applicable += 1
            if check.d > check.bound:
                violations.append((gp, sorted(G.edges), check))
    detail = (f"{len(violations)} violations in {applicable} stable graphs with a hub path "
              f"({stable} stable of {len(atlas)} graphs x {len(grid)} parameter points)")
    if violations:
        gp, edges, check = violations[0]
        detail += (f"; e.g. edges {edges} at a={gp.a} b={gp.b} l={gp.l} s={gp.s}: "
                   f"d={check.d} > bound {check.bound:.3f}")
    report(12, not violations, detail)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
