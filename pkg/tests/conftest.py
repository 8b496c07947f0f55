import os

import networkx as nx
import pytest

from opinionmax.linalg import CHECK_SOLVES_ENV

# energy-norm verification of every small iterative solve
os.environ.setdefault(CHECK_SOLVES_ENV, "1")

from opinionmax.graph import load_graph, make_partition  # noqa: E402


def from_nx(G):
    G = G.subgraph(max(nx.connected_components(G), key=len)).copy()
    return load_graph(list(G.edges()))


def random_graph(rng, n_lo=8, n_hi=40, p_extra=0.08):
    """Connected random graph: a random recursive tree plus extra edges."""
    n = int(rng.integers(n_lo, n_hi + 1))
    edges = {(int(rng.integers(0, v)), v) for v in range(1, n)}
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p_extra:
                edges.add((u, v))
    return load_graph(sorted(edges))


def random_instance(rng, n_lo=8, n_hi=40, leaders=(1, 3), p_extra=0.08):
    """Random connected graph with random leader sets leaving at least one follower."""
    g = random_graph(rng, max(n_lo, 2 * leaders[1] + 1), max(n_hi, 2 * leaders[1] + 1), p_extra)
    n0 = int(rng.integers(leaders[0], leaders[1] + 1))
    n1 = int(rng.integers(leaders[0], leaders[1] + 1))
    pick = rng.choice(g.n, n0 + n1, replace=False)
    return g, make_partition(g, pick[:n0], pick[n0:])


@pytest.fixture
def p4():
    g = load_graph([(0, 1), (1, 2), (2, 3)])
    return g, make_partition(g, [0], [3])


@pytest.fixture
def p3():
    g = load_graph([(0, 1), (1, 2)])
    return g, make_partition(g, [0], [2])


@pytest.fixture
def karate():
    return load_graph(list(nx.karate_club_graph().edges()))


# one summary line per acceptance criterion
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance_report():
    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
