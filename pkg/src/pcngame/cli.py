"""Command-line entry point: ``pcngame {rates,eval,attach,ne-check,gen}``.

Results go to stdout (JSON by default, CSV where tabular), diagnostics to
stderr. Exit status is 0 on success, 1 for invalid input and 2 when a
computation is refused or fails (for example an oversized search space).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from . import attach as att
from . import equilibrium as eq
from .errors import (
    BadSize,
    DivisionSpaceTooLarge,
    EmptyBudget,
    GraphFormatError,
    NoFeasibleCandidate,
    PcnError,
    SpaceTooLarge,
    TooLarge,
)
from .graph import Node, PcnGraph, graph_from_dict, graph_to_dict, load_graph, load_json
from .txmodel import edge_rates, trans_prob_matrix
from .utility import Action, GlobalParams, evaluate, traffic_from_list

COMPUTE_ERRORS = (DivisionSpaceTooLarge, SpaceTooLarge, TooLarge, NoFeasibleCandidate, EmptyBudget)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    graph_path: str | None = None
    params: GlobalParams = field(default_factory=GlobalParams)
    traffic: tuple | None = None
    options: dict = field(default_factory=dict)
    output_format: str = "json"
    seed: int = 0
    threads: int = 1


# -- output ----------------------------------------------------------------------


def _clean(value: Any) -> Any:
    """Round floats to 12 significant digits; infinities become strings."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        value = int(value) if value.denominator == 1 else float(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dump_json(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def dump_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(_clean(list(row)))
    return buf.getvalue()


# -- argument parsing --------------------------------------------------------------


def _nonneg(kind):
    def parse(text: str):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if value < 0:
            raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
        return value

    parse.__name__ = kind.__name__
    return parse


def _amount(text: str):
    """Coin amounts stay exact: integers as int, decimals as Fraction."""
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return int(value) if value.denominator == 1 else value


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pcngame", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=_nonneg(int), default=None,
                   help="worker cap (also PCN_ATTACH_THREADS)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *, graph_required=True):
        sp.add_argument("--graph", required=graph_required, help="graph JSON file")
        sp.add_argument("--config", help="JSON file with GlobalParams fields and optional traffic")
        sp.add_argument("--out", choices=("json", "csv"), default="json")

    rates = sub.add_parser("rates", help="edge probabilities and rates")
    common(rates)
    rates.add_argument("--s", type=_nonneg(float), default=None,
                       help="override every node's Zipf exponent")
    rates.set_defaults(out="csv")

    ev = sub.add_parser("eval", help="utility breakdown of a strategy")
    common(ev)
    ev.add_argument("--node", required=True, help="evaluated node id")
    ev.add_argument("--channel", action="append", default=[], metavar="PEER:LOCK",
                    help="extra channel opened by the node (repeatable)")

    at = sub.add_parser("attach", help="optimize channels for a joining node")
    common(at)
    at.add_argument("--joiner", default="joiner", help="id of the joining node")
    at.add_argument("--joiner-n-tx", type=_nonneg(float), default=1.0)
    at.add_argument("--joiner-s", type=_nonneg(float), default=1.0)
    at.add_argument("--budget", type=_amount, required=True)
    at.add_argument("--algo", choices=("greedy", "discrete", "continuous", "brute"), default="greedy")
    at.add_argument("--lock", type=_amount, default=None, help="fixed lock per channel")
    at.add_argument("--unit", type=_amount, default=None, help="lock granularity")
    at.add_argument("--eps", type=_nonneg(float), default=0.1)
    at.add_argument("--objective", choices=("U", "U'", "Ub"), default="U",
                    help="objective for --algo brute")

    ne = sub.add_parser("ne-check", help="Nash-equilibrium analysis of a topology")
    ne.add_argument("--topology", choices=("star", "path", "circle", "complete", "random", "file"),
                    required=True)
    ne.add_argument("--graph", help="graph JSON file for --topology file")
    ne.add_argument("--n", type=_nonneg(int), default=4)
    ne.add_argument("--a", type=_nonneg(float), required=True)
    ne.add_argument("--b", type=_nonneg(float), required=True)
    ne.add_argument("--l", type=_nonneg(float), required=True)
    ne.add_argument("--s", type=_nonneg(float), required=True)
    ne.add_argument("--eps", type=_nonneg(float), default=0.0)
    ne.add_argument("--seed", type=int, default=0)
    ne.add_argument("--mode", choices=("enumerate", "star-conditions", "diameter-bound"),
                    default="enumerate")
    ne.add_argument("--max-n", type=_nonneg(int), default=10)
    ne.add_argument("--out", choices=("json", "csv"), default="json")

    gen = sub.add_parser("gen", help="emit a topology as graph JSON")
    gen.add_argument("--topology", choices=("star", "path", "circle", "complete", "random"),
                     required=True)
    gen.add_argument("--n", type=_nonneg(int), required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--edge-prob", type=_nonneg(float), default=0.5)
    return p


def _load_config(path: str | None) -> tuple[GlobalParams, tuple | None]:
    if path is None:
        return GlobalParams(), None
    data = load_json(path)
    if not isinstance(data, dict):
        raise GraphFormatError("config: expected an object")
    data = dict(data)
    traffic = traffic_from_list(data.pop("traffic")) if "traffic" in data else None
    return GlobalParams.from_dict(data), traffic


def _match_id(g: PcnGraph, raw: str):
    """Resolve a command-line node id against the graph (ints or strings)."""
    if raw in g:
        return raw
    try:
        as_int = int(raw)
    except ValueError:
        as_int = None
    if as_int is not None and as_int in g:
        return as_int
    raise GraphFormatError(f"unknown node {raw!r}")


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("PCN_ATTACH_THREADS")
    if env is None:
        return 1
    try:
        value = int(env)
    except ValueError:
        raise GraphFormatError(f"PCN_ATTACH_THREADS: expected an integer, got {env!r}") from None
    if value < 1:
        raise GraphFormatError("PCN_ATTACH_THREADS: must be >= 1")
    return value


# -- commands ------------------------------------------------------------------------


def cmd_rates(args, cfg: RunConfig) -> str:
    g = load_graph(args.graph)
    probs = trans_prob_matrix(g, s=args.s)
    table = edge_rates(g, probs, cfg.params.N)
    rows = [(e.tail, e.head, table.p[e], table.rate(e)) for e in g.edges]
    if cfg.output_format == "csv":
        return dump_csv(("from", "to", "p_e", "lambda_e"), rows)
    return dump_json({
        "total_tx_rate": table.total_tx_rate,
        "edges": [{"from": a, "to": b, "p_e": p, "lambda_e": lam} for a, b, p, lam in rows],
    })


def _parse_channel(g: PcnGraph, text: str) -> Action:
    peer, sep, lock = text.rpartition(":")
    if not sep:
        raise GraphFormatError(f"--channel {text!r}: expected PEER:LOCK")
    try:
        amount = Fraction(lock)
    except (ValueError, ZeroDivisionError):
        raise GraphFormatError(f"--channel {text!r}: lock is not a number") from None
    if amount < 0:
        raise GraphFormatError(f"--channel {text!r}: lock must be >= 0")
    return Action(_match_id(g, peer), int(amount) if amount.denominator == 1 else amount)


def cmd_eval(args, cfg: RunConfig) -> str:
    g = load_graph(args.graph)
    u = _match_id(g, args.node)
    strategy = tuple(_parse_channel(g, c) for c in args.channel)
    b = evaluate(g, u, strategy, cfg.params, traffic=cfg.traffic)
    if cfg.output_format == "csv":
        return dump_csv(("revenue", "fees", "channel_cost", "total"),
                        [(b.revenue, b.fees, b.channel_cost, b.total)])
    return dump_json(b.to_dict())


def _lock_levels(args, problem: att.AttachProblem) -> list:
    if args.lock is not None:
        return [args.lock]
    if args.unit is not None:
        if args.unit <= 0:
            raise GraphFormatError("--unit must be > 0")
        top = Fraction(problem.budget) - Fraction(problem.params.C)
        k = int(top // Fraction(args.unit))
        return [args.unit * i for i in range(1, k + 1)]
    raise GraphFormatError("--lock or --unit is required for this algorithm")


def cmd_attach(args, cfg: RunConfig) -> str:
    g = load_graph(args.graph)
    joiner_id = args.joiner
    if joiner_id not in g:
        try:
            joiner_id = _match_id(g, joiner_id)
        except GraphFormatError:
            pass
    joiner = Node(joiner_id, args.joiner_n_tx, args.joiner_s)
    if joiner_id in g:
        g = PcnGraph([joiner if v.id == joiner_id else v for v in g.nodes], g.channels)
    problem = att.AttachProblem(g, joiner, args.budget, cfg.params, traffic=cfg.traffic)
    if args.algo == "greedy":
        if args.lock is None:
            raise GraphFormatError("--lock is required for --algo greedy")
        result = att.greedy_fixed(problem, args.lock)
    elif args.algo == "discrete":
        if args.unit is None:
            raise GraphFormatError("--unit is required for --algo discrete")
        if args.unit <= 0:
            raise GraphFormatError("--unit must be > 0")
        result = att.exhaustive_discrete(problem, args.unit)
    elif args.algo == "continuous":
        if args.eps <= 0:
            raise GraphFormatError("--eps must be > 0 for --algo continuous")
        levels = None
        if args.lock is not None or args.unit is not None:
            levels = _lock_levels(args, problem)
        result = att.continuous_local_search(problem, args.eps, lock_levels=levels)
    else:
        space = [Action(v, l) for v in problem.peers for l in _lock_levels(args, problem)]
        result = att.brute_force_oracle(problem, space, args.objective)
    out = result.to_dict(args.algo)
    if cfg.output_format == "csv":
        return dump_csv(("peer", "lock"), [(a["peer"], a["lock"]) for a in out["strategy"]])
    return dump_json(out)


def _ne_graph(args) -> PcnGraph:
    if args.topology == "file":
        if not args.graph:
            raise GraphFormatError("--graph is required for --topology file")
        return load_graph(args.graph)
    return eq.make_topology(args.topology, args.n, seed=args.seed)


def cmd_ne_check(args, cfg: RunConfig) -> str:
    n_param = args.n if args.topology == "star" else None
    gp = eq.GameParams(args.a, args.b, args.l, args.s, n_param)
    out: dict = {"mode": args.mode}
    if args.mode == "star-conditions":
        if args.topology != "star":
            raise GraphFormatError("--mode star-conditions needs --topology star")
        cond = eq.star_ne_conditions(gp)
        out["is_ne"] = cond.holds
        out["conditions"] = cond.to_dict()
        out["deviations"] = []
    elif args.mode == "diameter-bound":
        check = eq.hub_path_check(_ne_graph(args), gp, eps=args.eps)
        if check is None:
            out.update({"applicable": False, "is_ne": None, "deviations": []})
        else:
            out.update({
                "applicable": True,
                "path": list(check.path),
                "hub": check.hub,
                "d": check.d,
                "lambda_e": check.lambda_e,
                "p_min": check.p_min,
                "bound": check.bound,
                "holds": check.holds,
            })
    else:
        report = eq.is_nash_equilibrium(_ne_graph(args), gp, max_n=args.max_n)
        out["is_ne"] = report.is_ne
        out["deviations"] = [d.to_dict() for d in report.profitable]
        if args.topology == "star" and args.n >= 2:
            out["conditions"] = eq.star_ne_conditions(gp).to_dict()
    if cfg.output_format == "csv":
        rows = [(d["node"], d["gain"], " ".join(map(str, d["best_response"])))
                for d in out.get("deviations", [])]
        return dump_csv(("node", "gain", "best_response"), rows)
    return dump_json(out)


def cmd_gen(args, cfg: RunConfig) -> str:
    g = eq.make_topology(args.topology, args.n, seed=args.seed, edge_prob=args.edge_prob)
    return dump_json(graph_to_dict(g))


COMMANDS = {
    "rates": cmd_rates,
    "eval": cmd_eval,
    "attach": cmd_attach,
    "ne-check": cmd_ne_check,
    "gen": cmd_gen,
}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        params, traffic = _load_config(getattr(args, "config", None))
        cfg = RunConfig(
            command=args.command,
            graph_path=getattr(args, "graph", None),
            params=params,
            traffic=traffic,
            output_format=getattr(args, "out", "json"),
            seed=getattr(args, "seed", 0),
            threads=_threads(args),
        )
        text = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"pcngame: error: {exc}", file=stderr)
        return 1
    except COMPUTE_ERRORS as exc:
        print(f"pcngame: {type(exc).__name__}: {exc}", file=stderr)
        return 2
    except (PcnError, BadSize, OSError) as exc:
        print(f"pcngame: {type(exc).__name__}: {exc}", file=stderr)
        return 1
    except ArithmeticError as exc:
        print(f"pcngame: computation failed: {exc}", file=stderr)
        return 2
    stdout.write(text if text.endswith("\n") else text + "\n")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
