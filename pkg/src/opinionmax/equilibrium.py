"""Equilibrium opinions of the followers and the overall-opinion objective."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg

from .errors import NoConvergence
from .graph import CandidateEdge, Graph, Partition
from .linalg import FollowerSystem, sdd_solve


@dataclass(frozen=True, eq=False)
class OpinionState:
    x_followers: np.ndarray
    h_value: float


def _state(x: np.ndarray) -> OpinionState:
    # harmonic values lie in [0, 1]; clip rounding noise only
    x = np.clip(x, 0.0, 1.0)
    return OpinionState(x, float(x.sum()))


def equilibrium(sys: FollowerSystem, method: str = "dense", delta: float = 1e-10) -> OpinionState:
    """Follower opinions ``L_F^{-1} b`` and their sum."""
    if method == "dense":
        x = scipy.linalg.solve(sys.dense(), sys.b_vec, assume_a="pos")
    elif method == "iterative":
        x = sdd_solve(sys, sys.b_vec, delta)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _state(x)


def simulate(
    g: Graph,
    p: Partition,
    x0: np.ndarray,
    tol: float = 1e-10,
    max_iters: int = 1_000_000,
) -> OpinionState:
    """Run the synchronous averaging dynamics until the opinions stop moving.

    Leaders hold 0 or 1; every follower replaces its opinion by the mean over
    its neighbours. Stops when no opinion changes by ``tol`` or more in a step.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (p.nf,):
        raise ValueError(f"x0 must have one entry per follower ({p.nf})")
    return simulate_many(g, p, x0[:, None], tol, max_iters)[0]


def simulate_many(
    g: Graph, p: Partition, x0: np.ndarray, tol: float = 1e-10, max_iters: int = 1_000_000
) -> list[OpinionState]:
    """:func:`simulate` for the columns of an ``nf x r`` block of initial opinions."""
    x = np.array(x0, dtype=float).reshape(p.nf, -1)
    if np.isnan(x).any() or x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("initial opinions must lie in [0, 1]")
    f = p.followers
    a_ff = g.adj[f][:, f].astype(float).tocsr()
    lead = np.zeros(g.n)
    lead[p.s1] = 1.0
    inflow = (g.adj[f] @ lead)[:, None]
    dinv = (1.0 / g.degrees[f])[:, None]
    for _ in range(max_iters):
        new = (a_ff @ x + inflow) * dinv
        change = np.abs(new - x).max()
        x = new
        if change < tol:
            return [_state(x[:, c]) for c in range(x.shape[1])]
    raise NoConvergence(f"dynamics did not settle to {tol} within {max_iters} steps")


def objective_after(
    sys: FollowerSystem, added: Iterable[CandidateEdge], method: str = "dense"
) -> float:
    """Overall follower opinion after inserting ``added`` (computed from scratch)."""
    added = list(added)
    if len(set(added)) != len(added):
        raise ValueError("added edges must be distinct")
    locs = [sys.local_of(e.follower) for e in added]
    return equilibrium(sys.add_leader_edges(locs), method=method).h_value
