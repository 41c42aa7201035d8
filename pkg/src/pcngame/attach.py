"""Budget-constrained channel selection for a joining node.

All optimizers work on an :class:`AttachProblem` and return an
:class:`OptResult`. Objective values may be ``-inf`` (a strategy that
leaves the joiner disconnected).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from .errors import (
    DivisionSpaceTooLarge,
    EmptyBudget,
    NoFeasibleCandidate,
    PcnError,
    SpaceTooLarge,
)
from .graph import INF, Node, NodeId, PcnGraph, exact, id_key
from .utility import (
    Action,
    Demand,
    FixedRateModel,
    GlobalParams,
    channel_cost,
    evaluate,
    onchain_cost,
    strategy_outlay,
)

DIVISION_CAP = 10**7
BRUTE_FORCE_CAP = 20


class ObjectiveKind(str, enum.Enum):
    U = "U"
    U_SIMPLIFIED = "U'"
    BENEFIT = "Ub"


@dataclass(frozen=True)
class AttachProblem:
    """A joiner, its budget, and the network it wants to join.

    ``graph`` may or may not already contain the joiner; if not it is added
    as an isolated node. With ``fixed_rates`` the objectives are evaluated by
    :class:`FixedRateModel` instead of recomputing rates per strategy.
    """

    graph: PcnGraph
    joiner: Node
    budget: Any
    params: GlobalParams = field(default_factory=GlobalParams)
    candidates: tuple | None = None
    traffic: tuple[Demand, ...] | None = None
    fixed_rates: bool = False

    def __post_init__(self) -> None:
        if self.budget <= 0:
            raise PcnError("budget must be > 0")
        if self.candidates is not None:
            if self.joiner.id in self.candidates:
                raise PcnError("candidate peers must exclude the joiner")
            for v in self.candidates:
                self.graph.node(v)

    @property
    def base_graph(self) -> PcnGraph:
        if self.joiner.id in self.graph:
            return self.graph
        return self.graph.with_node(self.joiner)

    @property
    def peers(self) -> tuple:
        pool = self.candidates
        if pool is None:
            pool = [v for v in self.graph if v != self.joiner.id]
        return tuple(sorted(pool, key=id_key))

    def feasible(self, strategy: Iterable[Action]) -> bool:
        return strategy_outlay(strategy, self.params) <= exact(self.budget)


@dataclass(frozen=True)
class OptResult:
    strategy: tuple
    objective_value: float
    objective_kind: ObjectiveKind
    evaluations: int
    iterations: int = 0
    gains: tuple = ()

    def to_dict(self, algorithm: str) -> dict:
        return {
            "algorithm": algorithm,
            "strategy": [{"peer": a.peer, "lock": a.lock} for a in self.strategy],
            "objective_kind": self.objective_kind.value,
            "objective_value": self.objective_value,
            "evaluations": self.evaluations,
        }


class Evaluator:
    """Objective oracle bound to one problem, counting calls."""

    def __init__(self, problem: AttachProblem, kind: ObjectiveKind):
        self.problem = problem
        self.kind = ObjectiveKind(kind)
        self.calls = 0
        self._graph = problem.base_graph
        self._fixed = (
            FixedRateModel(self._graph, problem.joiner.id, problem.params)
            if problem.fixed_rates
            else None
        )
        self._c_u = onchain_cost(self._graph, problem.joiner.id, problem.params)
        self._memo: dict = {}

    def breakdown(self, strategy: Sequence[Action]):
        if self._fixed is not None:
            return self._fixed.breakdown(strategy)
        return evaluate(
            self._graph, self.problem.joiner.id, strategy, self.problem.params,
            traffic=self.problem.traffic,
        )

    def __call__(self, strategy: Sequence[Action]) -> float:
        self.calls += 1
        # the value depends on the multiset of actions, not their order
        key = tuple(sorted(_action_key(a) for a in strategy))
        if key not in self._memo:
            self._memo[key] = self._value(strategy)
        return self._memo[key]

    def _value(self, strategy: Sequence[Action]) -> float:
        b = self.breakdown(strategy)
        if b.fees == INF:
            return -INF
        if self.kind is ObjectiveKind.U_SIMPLIFIED:
            return b.revenue - b.fees
        if self.kind is ObjectiveKind.U:
            return b.total
        return self._c_u + b.total


def _gain(new: float, old: float) -> float:
    if old == -INF:
        return 0.0 if new == -INF else INF
    return new - old


def _action_key(act: Action) -> tuple:
    return (id_key(act.peer), exact(act.lock))


# -- greedy ----------------------------------------------------------------------


def _greedy_schedule(
    problem: AttachProblem, locks: Sequence[Any], objective: Evaluator
) -> tuple[tuple, float, tuple]:
    """Greedy selection where step ``j`` must open a channel locking ``locks[j]``.

    Returns the best prefix, its value, and the per-step marginal gains.
    """
    peers = problem.peers
    chosen: list[Action] = []
    used: set = set()
    current = -INF
    prefixes: list[tuple[tuple, float]] = []
    gains = []
    for lock in locks:
        best = None
        best_value = -INF
        for v in peers:
            act = Action(v, lock)
            if (v, exact(lock)) in used:
                continue
            value = objective((*chosen, act))
            if best is None or value > best_value:
                best, best_value = act, value
        if best is None:
            break
        gains.append(_gain(best_value, current))
        chosen.append(best)
        used.add((best.peer, exact(best.lock)))
        current = best_value
        prefixes.append((tuple(chosen), current))
    if not prefixes:
        return (), -INF, ()
    top = max(range(len(prefixes)), key=lambda i: (prefixes[i][1], -i))
    return prefixes[top][0], prefixes[top][1], tuple(gains)


def max_channels(problem: AttachProblem, lock: Any) -> int:
    per = exact(problem.params.C) + exact(lock)
    if per == 0:
        return len(problem.peers)
    return int(exact(problem.budget) // per)


def greedy_fixed(problem: AttachProblem, l1: Any) -> OptResult:
    """Greedy over ``(peer, l1)`` actions maximizing revenue minus fees."""
    if l1 < 0:
        raise PcnError("lock must be >= 0")
    M = max_channels(problem, l1)
    if M < 1:
        raise EmptyBudget(
            f"budget {problem.budget} cannot fund a channel costing {problem.params.C} + {l1}"
        )
    M = min(M, len(problem.peers))
    objective = Evaluator(problem, ObjectiveKind.U_SIMPLIFIED)
    strategy, value, gains = _greedy_schedule(problem, [l1] * M, objective)
    return OptResult(strategy, value, ObjectiveKind.U_SIMPLIFIED, objective.calls, M, gains)


# -- exhaustive over discretized locks --------------------------------------------


def compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    """Ordered ways to write ``total`` as ``parts`` non-negative integers."""
    if parts == 1:
        yield (total,)
        return
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def division_count(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


def _schedule_limits(budget: Fraction, C: Fraction, unit: Fraction) -> list[tuple[int, int]]:
    """``(k, T)`` pairs: ``k`` channels may share at most ``T`` units of lock."""
    units = int(budget // unit)
    out = []
    k = 1
    while k * (C + unit) <= budget:
        out.append((k, min(units, int((budget - k * C) // unit))))
        k += 1
    return out


def schedule_count(budget: Any, C: Any, m: Any) -> int:
    """Number of distinct lock schedules :func:`exhaustive_discrete` runs."""
    return sum(math.comb(T, k) for k, T in _schedule_limits(exact(budget), exact(C), exact(m)))


def lock_schedules(budget: Any, C: Any, m: Any) -> Iterable[tuple[int, ...]]:
    """Positive unit counts ``(p_1, .., p_k)`` whose channels fit the budget.

    Each is one budget division with its zero parts dropped (they open no
    channel) and the remainder left unspent. Ordered by ``k``, then by the
    units spent, then lexicographically.
    """
    for k, T in _schedule_limits(exact(budget), exact(C), exact(m)):
        for total in range(k, T + 1):
            for parts in compositions(total - k, k):
                yield tuple(p + 1 for p in parts)


def exhaustive_discrete(problem: AttachProblem, m: Any, *, cap: int = DIVISION_CAP) -> OptResult:
    """Run the fixed-order greedy for every split of the budget in units of ``m``.

    A split assigns ``parts[j] * m`` coins of lock to greedy step ``j``.
    Splits that cannot pay the per-channel cost ``C`` on top are skipped.
    """
    if m <= 0:
        raise PcnError("unit m must be > 0")
    budget, C = exact(problem.budget), exact(problem.params.C)
    count = schedule_count(budget, C, m)
    if count == 0:
        raise EmptyBudget(f"budget {problem.budget} admits no channel with lock >= {m}")
    if count > cap:
        raise DivisionSpaceTooLarge(
            f"{count} divisions exceed the cap of {cap}; use a larger unit"
        )
    unit = exact(m)
    objective = Evaluator(problem, ObjectiveKind.U_SIMPLIFIED)
    best: tuple = ()
    best_value = -INF
    runs = 0
    for parts in lock_schedules(budget, C, m):
        locks = [_as_amount(p * unit, m) for p in parts]
        strategy, value, _ = _greedy_schedule(problem, locks, objective)
        runs += 1
        if value > best_value or (not best and strategy):
            best, best_value = strategy, value
    return OptResult(best, best_value, ObjectiveKind.U_SIMPLIFIED, objective.calls, runs)


def _as_amount(value: Fraction, like: Any) -> Any:
    if isinstance(like, int) and value.denominator == 1:
        return int(value)
    if isinstance(like, Fraction):
        return value
    return float(value)


# -- brute force ------------------------------------------------------------------


def brute_force_oracle(
    problem: AttachProblem,
    action_space: Sequence[Action],
    objective_kind: ObjectiveKind | str = ObjectiveKind.U,
    *,
    max_size: int | None = None,
) -> OptResult:
    """Exact maximizer over all budget-feasible subsets of ``action_space``."""
    actions = sorted(set(action_space), key=_action_key)
    if len(actions) > BRUTE_FORCE_CAP:
        raise SpaceTooLarge(f"{len(actions)} actions exceed the cap of {BRUTE_FORCE_CAP}")
    objective = Evaluator(problem, ObjectiveKind(objective_kind))
    limit = len(actions) if max_size is None else min(max_size, len(actions))
    budget = exact(problem.budget)
    costs = [exact(problem.params.C) + exact(a.lock) for a in actions]
    found: list[tuple[int, ...]] = []

    def extend(start: int, picked: tuple, spent: Fraction) -> None:
        # outlays only grow, so an unaffordable set has no affordable superset
        for i in range(start, len(actions)):
            total = spent + costs[i]
            if total > budget:
                continue
            chosen = (*picked, i)
            found.append(chosen)
            if len(chosen) < limit:
                extend(i + 1, chosen, total)

    extend(0, (), Fraction(0))
    found.sort(key=lambda idx: (len(idx), idx))
    best: tuple = ()
    best_value = -INF
    for idx in found:
        subset = tuple(actions[i] for i in idx)
        value = objective(subset)
        if value > best_value:
            best, best_value = subset, value
    return OptResult(best, best_value, objective.kind, objective.calls)


# -- continuous locks: local search on the benefit function -------------------------


def positive_candidates(problem: AttachProblem, actions: Iterable[Action]) -> list[Action]:
    """Actions whose channel keeps the benefit function positive and submodular."""
    params = problem.params
    if params.C <= 0:
        raise PcnError("the positivity test needs C > 0")
    c_u = onchain_cost(problem.base_graph, problem.joiner.id, params)
    scale = float(problem.budget) / params.C
    probe = Evaluator(problem, ObjectiveKind.U)
    kept = []
    for act in actions:
        fees = probe.breakdown((act,)).fees
        if fees + scale * channel_cost(params, act.lock) < c_u:
            kept.append(act)
    return kept


def _local_search(
    actions: Sequence[Action],
    objective: Callable[[tuple], float],
    feasible: Callable[[tuple], bool],
    eps: float,
) -> tuple[tuple, float]:
    """Add / delete / swap local search with a multiplicative acceptance bar."""
    if not actions:
        return (), -INF
    bar = eps / len(actions) ** 2

    def better(new: float, old: float) -> bool:
        if old == -INF:
            return new > old
        return new > old + bar * abs(old)

    current: tuple = ()
    value = -INF
    for act in actions:
        if feasible((act,)):
            v = objective((act,))
            if v > value:
                current, value = (act,), v
    if not current:
        return (), -INF
    improved = True
    while improved:
        improved = False
        outside = [a for a in actions if a not in current]
        moves = [(*current, a) for a in outside]
        if len(current) > 1:
            moves += [tuple(x for x in current if x != a) for a in current]
        moves += [
            tuple(x if x != out else new for x in current)
            for out in current
            for new in outside
        ]
        for cand in moves:
            if not feasible(cand):
                continue
            v = objective(cand)
            if better(v, value):
                current, value = cand, v
                improved = True
                break
    return tuple(sorted(current, key=_action_key)), value


def lock_grid(budget: Any, C: Any, step: Fraction) -> list:
    top = exact(budget) - exact(C)
    out = []
    k = 1
    while k * step <= top:
        out.append(k * step)
        k += 1
    return out


def continuous_local_search(
    problem: AttachProblem,
    eps: float,
    *,
    lock_levels: Sequence[Any] | None = None,
    max_refinements: int = 6,
) -> OptResult:
    """Local search on the benefit function over a (refined) lock grid.

    With ``lock_levels`` the grid is fixed. Otherwise the step starts at an
    eighth of the budget and halves until the relative improvement of the
    best strategy drops below ``eps``.
    """
    if eps <= 0:
        raise PcnError("eps must be > 0")
    objective = Evaluator(problem, ObjectiveKind.BENEFIT)
    if lock_levels is not None:
        grids = [sorted({exact(x) for x in lock_levels if x > 0})]
    else:
        grids = None
    best: tuple = ()
    best_value = -INF
    step = exact(problem.budget) / 8
    rounds = 0
    saw_candidate = False
    while True:
        levels = grids[0] if grids is not None else lock_grid(problem.budget, problem.params.C, step)
        actions = [Action(v, _as_amount(l, problem.budget)) for v in problem.peers for l in levels]
        actions = [a for a in actions if problem.feasible((a,))]
        actions = positive_candidates(problem, actions)
        rounds += 1
        if actions:
            saw_candidate = True
            found, value = _local_search(actions, objective, problem.feasible, eps)
            rest = [a for a in actions if a not in found]
            found2, value2 = _local_search(rest, objective, problem.feasible, eps)
            if value2 > value:
                found, value = found2, value2
            gained = value - best_value if best_value != -INF else INF
            if value > best_value:
                best, best_value = found, value
            if grids is not None or rounds > max_refinements:
                break
            if best_value != -INF and gained <= eps * abs(best_value):
                break
        elif grids is not None or rounds > max_refinements:
            break
        step /= 2
    if not saw_candidate:
        raise NoFeasibleCandidate("no candidate channel keeps the benefit function positive")
    return OptResult(best, best_value, ObjectiveKind.BENEFIT, objective.calls, rounds)
