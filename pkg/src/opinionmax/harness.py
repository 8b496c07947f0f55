"""Experiment orchestration behind the command-line tool.

Each ``run_*`` function loads its inputs, runs the requested strategies and
returns CSV rows (header first). Writing the rows is left to :func:`write_csv`.
"""

from __future__ import annotations

import csv
import io
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .approx import ApproxConfig, select_approx
from .baselines import BASELINE_KINDS, ORACLE_CAP, select_baseline, select_oracle
from .equilibrium import equilibrium
from .errors import ConfigError
from .exact import SelectionResult, select_exact
from .graph import (
    CandidateSet,
    Graph,
    Partition,
    build_candidate_set,
    check_eta,
    load_graph_file,
    make_partition,
    random_partition,
)
from .linalg import PRACTICAL, TOLERANCE_MODES, FollowerSystem, build_follower_system

ALGORITHMS = ("exact", "approx", "oracle") + BASELINE_KINDS

SELECT_HEADER = ["round", "leader_id", "follower_id", "gain_estimate", "h_exact", "elapsed_ms"]
COMPARE_HEADER = ["strategy", "round", "h_exact"]
ERROR_HEADER = [
    "graph",
    "nodes",
    "edges",
    "eps",
    "runtime_exact",
    "runtime_approx",
    "relative_error",
    "gamma_exact",
    "gamma_approx",
]


@dataclass(frozen=True)
class LeaderSpec:
    """Either explicit external ids for both sides or a random draw."""

    s0: tuple[int, ...] = ()
    s1: tuple[int, ...] = ()
    n0: int = 0
    n1: int = 0
    seed: int = 0

    @property
    def is_random(self) -> bool:
        return not self.s0 and not self.s1

    def resolve(self, g: Graph) -> Partition:
        if self.is_random:
            return random_partition(g, self.n0, self.n1, self.seed)
        return make_partition(g, g.indices_of(self.s0), g.indices_of(self.s1))


def parse_leader_file(path: str | Path) -> LeaderSpec:
    """Read ``s0: <ids>`` / ``s1: <ids>`` lines with comma-separated ids."""
    sides: dict[str, tuple[int, ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, rest = line.partition(":")
            key = key.strip().lower()
            if key not in ("s0", "s1"):
                raise ConfigError(f"{path}: unexpected line {line!r}")
            sides[key] = parse_ids(rest)
    return LeaderSpec(s0=sides.get("s0", ()), s1=sides.get("s1", ()))


def parse_ids(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise ConfigError(f"bad id list {text!r}") from None


@dataclass
class RunConfig:
    graph_path: str
    leaders: LeaderSpec
    algorithm: str = "exact"
    k: int = 1
    eps: float | None = None
    eta: float = 0.9
    seed: int = 0
    tolerance_mode: str = PRACTICAL
    output_path: str | None = None
    threads: int = 1
    minimize: bool = False
    oracle_cap: int = ORACLE_CAP
    jl_constant: float | None = None

    def validate(self, algorithms: Sequence[str] | None = None) -> None:
        algorithms = [self.algorithm] if algorithms is None else list(algorithms)
        for alg in algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {', '.join(ALGORITHMS)}")
        if "approx" in algorithms and self.eps is None:
            raise ConfigError("--eps is required for the approx algorithm")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.tolerance_mode not in TOLERANCE_MODES:
            raise ConfigError(f"unknown tolerance mode {self.tolerance_mode!r}")
        check_eta(self.eta)

    def approx_config(self) -> ApproxConfig:
        return ApproxConfig(
            eps=self.eps,
            eta=self.eta,
            seed=self.seed,
            tolerance_mode=self.tolerance_mode,
            jl_constant=self.jl_constant,
            threads=self.threads,
        )


@dataclass
class Problem:
    """A loaded instance: graph, (possibly swapped) partition and candidate set."""

    graph: Graph
    partition: Partition
    system: FollowerSystem
    candidates: CandidateSet
    h0: float
    minimize: bool = False

    def report(self, h: float) -> float:
        """Objective in the caller's orientation (1-complement when minimising)."""
        return self.system.nf - h if self.minimize else h


def prepare(graph: Graph, partition: Partition, eta: float, minimize: bool = False) -> Problem:
    if minimize:
        partition = partition.swapped()
    sys_ = build_follower_system(graph, partition)
    method = "dense" if sys_.nf <= 2000 else "iterative"
    state = equilibrium(sys_, method)
    q = build_candidate_set(graph, partition, state.x_followers, eta)
    return Problem(graph, partition, sys_, q, state.h_value, minimize)


def load_problem(cfg: RunConfig) -> Problem:
    g = load_graph_file(cfg.graph_path)
    return prepare(g, cfg.leaders.resolve(g), cfg.eta, cfg.minimize)


def run_algorithm(problem: Problem, alg: str, k: int, cfg: RunConfig) -> SelectionResult:
    g, p, q = problem.graph, problem.partition, problem.candidates
    if alg == "exact":
        return select_exact(g, p, q, k)
    if alg == "approx":
        return select_approx(g, p, q, k, cfg.approx_config())
    if alg == "oracle":
        return select_oracle(g, p, q, k, cap=cfg.oracle_cap)
    return select_baseline(g, p, q, k, alg, seed=cfg.seed)


def _num(v: float) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def selection_rows(problem: Problem, res: SelectionResult) -> list[list[str]]:
    g = problem.graph
    sign = -1.0 if problem.minimize else 1.0
    rows = [SELECT_HEADER, ["0", "", "", "", _num(problem.report(res.h_trace[0])), _num(res.setup_seconds * 1e3)]]
    for r, edge in enumerate(res.chosen, 1):
        rows.append(
            [
                str(r),
                str(int(g.ids[edge.leader])),
                str(int(g.ids[edge.follower])),
                _num(sign * res.gains[r - 1]),
                _num(problem.report(res.h_trace[r])),
                _num(res.elapsed_per_round[r - 1] * 1e3),
            ]
        )
    rows.append(
        [
            "total",
            "",
            "",
            _num(sign * res.gain),
            _num(problem.report(res.h_trace[-1])),
            _num(res.total_seconds * 1e3),
        ]
    )
    return rows


def run_select(cfg: RunConfig) -> tuple[SelectionResult, list[list[str]]]:
    cfg.validate()
    problem = load_problem(cfg)
    res = run_algorithm(problem, cfg.algorithm, cfg.k, cfg)
    return res, selection_rows(problem, res)


def run_compare(cfg: RunConfig, strategies: Sequence[str]) -> list[list[str]]:
    """Objective after every round for each strategy, on one shared instance."""
    strategies = list(strategies)
    if not strategies:
        raise ConfigError("no strategies given")
    cfg.validate(strategies)
    problem = load_problem(cfg)
    rows = [COMPARE_HEADER]
    for name in strategies:
        if name == "oracle":
            # the optimum for each budget is a separate search
            trace = [problem.h0]
            for kk in range(1, min(cfg.k, len(problem.candidates)) + 1):
                trace.append(run_algorithm(problem, "oracle", kk, cfg).h_trace[-1])
        else:
            trace = run_algorithm(problem, name, cfg.k, cfg).h_trace
        for r, h in enumerate(trace):
            rows.append([name, str(r), _num(problem.report(h))])
    return rows


def run_error_table(
    graph_paths: Sequence[str],
    eps_values: Sequence[float],
    k: int = 50,
    n0: int = 10,
    n1: int = 10,
    seed: int = 0,
    eta: float = 0.9,
    tolerance_mode: str = PRACTICAL,
    threads: int = 1,
    jl_constant: float | None = None,
) -> list[list[str]]:
    """Runtime of both greedy variants and the relative error of the approximate one.

    The relative error is ``|gamma - gamma~| / gamma`` where ``gamma`` and
    ``gamma~`` are the objective increases achieved by the exact and the
    approximate selections.
    """
    if not graph_paths:
        raise ConfigError("no graphs given")
    if not eps_values:
        raise ConfigError("no eps values given")
    rows = [ERROR_HEADER]
    for path in graph_paths:
        g = load_graph_file(path)
        problem = prepare(g, random_partition(g, n0, n1, seed), eta)
        cfg = RunConfig(
            graph_path=str(path),
            leaders=LeaderSpec(n0=n0, n1=n1, seed=seed),
            k=k,
            eta=eta,
            seed=seed,
            tolerance_mode=tolerance_mode,
            threads=threads,
            jl_constant=jl_constant,
        )
        exact = run_algorithm(problem, "exact", k, cfg)
        for eps in eps_values:
            cfg.eps = eps
            approx = run_algorithm(problem, "approx", k, cfg)
            gamma, gamma_t = exact.gain, approx.gain
            err = abs(gamma - gamma_t) / gamma if gamma > 0 else 0.0
            rows.append(
                [
                    Path(path).name,
                    str(g.n),
                    str(g.m),
                    repr(eps),
                    _num(exact.total_seconds),
                    _num(approx.total_seconds),
                    _num(err),
                    _num(gamma),
                    _num(gamma_t),
                ]
            )
    return rows


def run_equilibrium(cfg: RunConfig) -> list[list[str]]:
    """Equilibrium opinion of every node, followed by the follower total."""
    cfg.validate([])
    g = load_graph_file(cfg.graph_path)
    p = cfg.leaders.resolve(g)
    sys_ = build_follower_system(g, p)
    state = equilibrium(sys_, "dense" if sys_.nf <= 2000 else "iterative")
    opinion = [0.0] * g.n
    role = ["follower"] * g.n
    for v in p.s0:
        role[v] = "s0"
    for v in p.s1:
        role[v] = "s1"
        opinion[v] = 1.0
    for j, v in enumerate(p.followers):
        opinion[v] = float(state.x_followers[j])
    rows = [["node_id", "role", "opinion"]]
    rows += [[str(int(g.ids[v])), role[v], repr(opinion[v])] for v in range(g.n)]
    rows.append(["total", "followers", repr(state.h_value)])
    return rows


def write_csv(rows: list[list[str]], path: str | None) -> None:
    if path is None or path == "-":
        buf = io.StringIO()
        csv.writer(buf).writerows(rows)
        sys.stdout.write(buf.getvalue())
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh).writerows(rows)


def default_threads() -> int:
    return os.cpu_count() or 1
