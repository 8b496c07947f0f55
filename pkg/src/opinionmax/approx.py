"""Sketch-based gain estimates and the fast greedy built on them."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .equilibrium import equilibrium
from .exact import GainEstimate, SelectionResult, check_k, first_max
from .graph import CandidateEdge, CandidateSet, Graph, Partition, check_eta
from .linalg import (
    PRACTICAL,
    TOLERANCE_MODES,
    FollowerSystem,
    build_follower_system,
    check_eps,
    make_sketch,
    sdd_solve,
    sketched_diagonal,
    solve_tolerances,
)


@dataclass(frozen=True)
class ApproxConfig:
    """Parameters of the approximate greedy.

    ``jl_constant`` and ``sketch_dim`` override the sketch size (see
    :func:`opinionmax.linalg.sketch_dimension`); leave them ``None`` for the
    mode's default.
    """

    eps: float
    eta: float = 0.9
    seed: int = 0
    tolerance_mode: str = PRACTICAL
    jl_constant: float | None = None
    sketch_dim: int | None = None
    threads: int = 1

    def __post_init__(self):
        check_eps(self.eps)
        check_eta(self.eta)
        if self.tolerance_mode not in TOLERANCE_MODES:
            raise ValueError(f"unknown tolerance mode {self.tolerance_mode!r}")


def estimate_follower_gains(sys: FollowerSystem, cfg: ApproxConfig, key: tuple = ()) -> np.ndarray:
    """Estimated objective increase for a new 1-leader edge at every follower.

    Numerator terms come from two solves (against the all-ones vector and
    ``b``); the denominator uses the sketched diagonal of ``L_F^{-1}``.
    """
    tol = solve_tolerances(sys.n, cfg.eps, cfg.eta, cfg.tolerance_mode)
    h = sdd_solve(sys, np.ones(sys.nf), tol.delta1, certified=tol.certified)
    pv = sdd_solve(sys, sys.b_vec, tol.delta2, certified=tol.certified)
    sk = make_sketch(
        sys,
        cfg.eps,
        cfg.seed,
        mode=cfg.tolerance_mode,
        jl_constant=cfg.jl_constant,
        t=cfg.sketch_dim,
        key=key,
    )
    diag = sketched_diagonal(sys, sk, tol.delta3, certified=tol.certified, threads=cfg.threads)
    return h * (1.0 - pv) / (1.0 + diag)


def opinion_comp(
    g: Graph, p: Partition, q_remaining: CandidateSet, cfg: ApproxConfig, round_index: int = 0
) -> list[GainEstimate]:
    """Estimated gain of every edge in ``q_remaining`` on the graph ``g``."""
    if len(q_remaining) == 0:
        raise ValueError("no candidate edges to evaluate")
    sys = build_follower_system(g, p)
    est = estimate_follower_gains(sys, cfg, key=(round_index,))[q_remaining.local]
    return [GainEstimate(e, float(v)) for e, v in zip(q_remaining, est)]


def select_approx(
    g: Graph, p: Partition, q: CandidateSet, k: int, cfg: ApproxConfig
) -> SelectionResult:
    """Greedy selection driven by sketched gain estimates.

    Every round re-estimates all remaining candidates on the current graph
    with a fresh sketch keyed by ``(cfg.seed, round)``. The reported
    ``h_trace`` is recomputed with an accurate solve after each addition and
    is not part of the timed work.
    """
    check_k(k)
    if q.eta != cfg.eta:
        warnings.warn(
            f"candidate set was built with eta={q.eta} but the solver tolerances use eta={cfg.eta}",
            stacklevel=2,
        )
    start = time.perf_counter()
    sys = build_follower_system(g, p)
    setup = time.perf_counter() - start
    h_trace = [equilibrium(sys, "iterative").h_value]

    rounds = min(k, len(q))
    available = np.ones(len(q), dtype=bool)
    chosen: list[CandidateEdge] = []
    gains, elapsed = [], []
    for r in range(rounds):
        t0 = time.perf_counter()
        est = np.where(available, estimate_follower_gains(sys, cfg, key=(r,))[q.local], -np.inf)
        i = first_max(est)
        available[i] = False
        sys = sys.add_leader_edges([int(q.local[i])])
        elapsed.append(time.perf_counter() - t0)
        chosen.append(q[i])
        gains.append(float(est[i]))
        h_trace.append(equilibrium(sys, "iterative").h_value)
    return SelectionResult(
        chosen=chosen,
        h_trace=h_trace,
        elapsed_per_round=elapsed,
        algorithm_tag="approx",
        gains=gains,
        truncated=k > len(q),
        setup_seconds=setup,
    )
