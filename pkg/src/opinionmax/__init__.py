"""Choosing leader-follower edges that raise the followers' equilibrium opinion."""

from .approx import ApproxConfig, opinion_comp, select_approx
from .baselines import centrality, select_baseline, select_oracle
from .equilibrium import OpinionState, equilibrium, objective_after, simulate
from .exact import GainEstimate, SelectionResult, marginal_gain, select_exact
from .graph import (
    CandidateEdge,
    CandidateSet,
    Graph,
    Partition,
    build_candidate_set,
    load_graph,
    load_graph_file,
    make_partition,
    random_partition,
)
from .linalg import (
    FollowerSystem,
    build_follower_system,
    dense_inverse,
    make_sketch,
    sdd_solve,
    sherman_morrison_update,
    sketched_rows,
)

__all__ = [
    "ApproxConfig",
    "CandidateEdge",
    "CandidateSet",
    "FollowerSystem",
    "GainEstimate",
    "Graph",
    "OpinionState",
    "Partition",
    "SelectionResult",
    "build_candidate_set",
    "build_follower_system",
    "centrality",
    "dense_inverse",
    "equilibrium",
    "load_graph",
    "load_graph_file",
    "make_partition",
    "make_sketch",
    "marginal_gain",
    "objective_after",
    "opinion_comp",
    "random_partition",
    "sdd_solve",
    "select_approx",
    "select_baseline",
    "select_exact",
    "select_oracle",
    "sherman_morrison_update",
    "simulate",
    "sketched_rows",
]
