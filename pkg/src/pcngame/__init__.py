"""Channel-creation strategies and equilibrium analysis for payment-channel networks."""

from .attach import (
    AttachProblem,
    ObjectiveKind,
    OptResult,
    brute_force_oracle,
    continuous_local_search,
    exhaustive_discrete,
    greedy_fixed,
)
from .equilibrium import (
    DeviationReport,
    GameParams,
    best_response,
    diameter_bound,
    game_utility,
    harmonic,
    is_nash_equilibrium,
    make_topology,
    star_ne_conditions,
)
from .errors import PcnError
from .graph import Channel, Edge, Node, PcnGraph, all_pairs_path_stats, reduced_subgraph
from .txmodel import edge_rates, rank_factors, trans_prob, trans_prob_matrix
from .utility import Action, GlobalParams, UtilityBreakdown, benefit, simplified_utility, utility

__all__ = [
    "Action",
    "AttachProblem",
    "Channel",
    "DeviationReport",
    "Edge",
    "GameParams",
    "GlobalParams",
    "Node",
    "ObjectiveKind",
    "OptResult",
    "PcnError",
    "PcnGraph",
    "UtilityBreakdown",
    "all_pairs_path_stats",
    "benefit",
    "best_response",
    "brute_force_oracle",
    "continuous_local_search",
    "diameter_bound",
    "edge_rates",
    "exhaustive_discrete",
    "game_utility",
    "greedy_fixed",
    "harmonic",
    "is_nash_equilibrium",
    "make_topology",
    "rank_factors",
    "reduced_subgraph",
    "simplified_utility",
    "star_ne_conditions",
    "trans_prob",
    "trans_prob_matrix",
    "utility",
]
