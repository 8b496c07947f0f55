"""Centrality-based and random baselines, and the exhaustive optimum."""

from __future__ import annotations

import itertools
import math
import time
from collections import deque

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import shortest_path

from .equilibrium import equilibrium
from .errors import CombinatorialBlowup, ConfigError
from .exact import SelectionResult, check_k
from .graph import CandidateSet, Graph, Partition
from .linalg import FollowerSystem, build_follower_system

BASELINE_KINDS = ("random", "top-degree", "top-pagerank", "top-closeness", "top-betweenness")
ORACLE_CAP = 2_000_000


def degree_centrality(g: Graph) -> np.ndarray:
    return g.degrees.astype(float)


def closeness_centrality(g: Graph, batch: int = 512) -> np.ndarray:
    """``(n - 1) / sum of BFS distances`` for every node."""
    out = np.empty(g.n)
    for lo in range(0, g.n, batch):
        idx = np.arange(lo, min(lo + batch, g.n))
        dist = shortest_path(g.adj, directed=False, unweighted=True, indices=idx)
        out[idx] = (g.n - 1) / dist.sum(axis=1)
    return out


def betweenness_centrality(g: Graph) -> np.ndarray:
    """Unnormalised shortest-path betweenness (Brandes), endpoints excluded."""
    nbrs = [g.neighbors(v).tolist() for v in range(g.n)]
    bc = [0.0] * g.n
    for s in range(g.n):
        order = []
        preds = [[] for _ in range(g.n)]
        sigma = [0] * g.n
        dist = [-1] * g.n
        sigma[s], dist[s] = 1, 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            dv = dist[v] + 1
            for w in nbrs[v]:
                if dist[w] < 0:
                    dist[w] = dv
                    queue.append(w)
                if dist[w] == dv:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * g.n
        for w in reversed(order):
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    # each unordered pair was counted from both ends
    return np.asarray(bc) / 2.0


def pagerank(g: Graph, damping: float = 0.85, tol: float = 1e-10, max_iters: int = 10_000) -> np.ndarray:
    """Power iteration; stops when the l1 change drops below ``tol``."""
    inv_deg = 1.0 / g.degrees
    adj = g.adj.astype(float)
    x = np.full(g.n, 1.0 / g.n)
    for _ in range(max_iters):
        new = damping * (adj @ (x * inv_deg)) + (1.0 - damping) / g.n
        new /= new.sum()
        if np.abs(new - x).sum() < tol:
            return new
        x = new
    return x


_CENTRALITY = {
    "degree": degree_centrality,
    "closeness": closeness_centrality,
    "betweenness": betweenness_centrality,
    "pagerank": pagerank,
}


def centrality(g: Graph, kind: str) -> np.ndarray:
    kind = kind.removeprefix("top-")
    if kind not in _CENTRALITY:
        raise ConfigError(f"unknown centrality {kind!r}")
    return _CENTRALITY[kind](g)


def objective_trace(sys: FollowerSystem, locals_, method: str = "iterative") -> list[float]:
    """Objective after each prefix of the given follower additions (from scratch)."""
    out = [equilibrium(sys, method).h_value]
    for r in range(1, len(locals_) + 1):
        out.append(equilibrium(sys.add_leader_edges(locals_[:r]), method).h_value)
    return out


def _trace_method(sys: FollowerSystem) -> str:
    return "dense" if sys.nf <= 2000 else "iterative"


def select_baseline(
    g: Graph, p: Partition, q: CandidateSet, k: int, kind: str, seed: int = 0
) -> SelectionResult:
    """Top-``k`` candidates by follower centrality in the original graph, or random ones."""
    check_k(k)
    if kind not in BASELINE_KINDS:
        raise ConfigError(f"unknown baseline {kind!r}")
    rounds = min(k, len(q))
    t0 = time.perf_counter()
    if kind == "random":
        pick = np.random.default_rng(seed).choice(len(q), size=rounds, replace=False)
    else:
        score = centrality(g, kind)[q.follower]
        pick = np.argsort(-score, kind="stable")[:rounds]
    elapsed = time.perf_counter() - t0
    sys = build_follower_system(g, p)
    chosen = [q[int(i)] for i in pick]
    return SelectionResult(
        chosen=chosen,
        h_trace=objective_trace(sys, [int(q.local[i]) for i in pick], _trace_method(sys)),
        elapsed_per_round=[elapsed / max(rounds, 1)] * rounds,
        algorithm_tag=kind,
        gains=[math.nan] * rounds,
        truncated=k > len(q),
    )


def select_oracle(
    g: Graph, p: Partition, q: CandidateSet, k: int, cap: int = ORACLE_CAP
) -> SelectionResult:
    """Best ``k``-subset of ``q`` by exhaustive enumeration.

    Every subset is evaluated from scratch with a dense solve. Ties go to the
    lexicographically first subset in candidate order.
    """
    check_k(k)
    kk = min(k, len(q))
    count = math.comb(len(q), kk)
    if count > cap:
        raise CombinatorialBlowup(f"C({len(q)}, {kk}) = {count} subsets exceed the cap of {cap}")
    t0 = time.perf_counter()
    sys = build_follower_system(g, p)
    lap = sys.dense()
    b = sys.b_vec
    best, best_h = (), -math.inf
    diag = np.arange(sys.nf)
    for subset in itertools.combinations(range(len(q)), kk):
        add = np.bincount(q.local[list(subset)], minlength=sys.nf).astype(float)
        m = lap.copy()
        m[diag, diag] += add
        h = scipy.linalg.solve(m, b + add, assume_a="pos").sum()
        if h > best_h:
            best, best_h = subset, h
    elapsed = time.perf_counter() - t0
    locs = [int(q.local[i]) for i in best]
    return SelectionResult(
        chosen=[q[i] for i in best],
        h_trace=objective_trace(sys, locs, "dense"),
        elapsed_per_round=[elapsed / max(kk, 1)] * kk,
        algorithm_tag="oracle",
        gains=[math.nan] * kk,
        truncated=k > len(q),
    )
