"""Graph container, leader/follower partition and candidate-edge construction."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import (
    DisconnectedGraph,
    DuplicateEdge,
    EdgeListFormatError,
    EmptyInput,
    EmptyS0,
    EmptyS1,
    EtaOutOfRange,
    NoFollowers,
    OverlappingLeaderSets,
    SelfLoop,
    TooManyLeaders,
    UnknownNode,
)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Connected, undirected, unweighted simple graph on dense node ids ``0..n-1``.

    ``edges`` keeps the input order of the edge list (after id remapping) so the
    graph can be written back out unchanged. ``ids[i]`` is the external id of
    internal node ``i``.
    """

    n: int
    edges: np.ndarray
    ids: np.ndarray
    adj: sp.csr_matrix = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adj.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        return self.adj.indices[self.adj.indptr[u]:self.adj.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        pos = np.searchsorted(nb, v)
        return bool(pos < len(nb) and nb[pos] == v)

    def index_of(self, external_id: int) -> int:
        pos = np.searchsorted(self._sorted_ids, external_id)
        if pos >= self.n or self._sorted_ids[pos] != external_id:
            raise UnknownNode(f"node id {external_id} is not in the graph")
        return int(self._sorted_order[pos])

    def indices_of(self, external_ids: Iterable[int]) -> list[int]:
        return [self.index_of(int(x)) for x in external_ids]

    @property
    def _sorted_order(self) -> np.ndarray:
        cached = self.__dict__.get("_order")
        if cached is None:
            cached = np.argsort(self.ids, kind="stable")
            object.__setattr__(self, "_order", cached)
        return cached

    @property
    def _sorted_ids(self) -> np.ndarray:
        return self.ids[self._sorted_order]

    def serialize(self) -> list[tuple[int, int]]:
        """Edge list in external ids, in the original order."""
        ext = self.ids[self.edges]
        return [(int(a), int(b)) for a, b in ext]


def _adjacency(n: int, edges: np.ndarray) -> sp.csr_matrix:
    u, v = edges[:, 0], edges[:, 1]
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    adj = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    adj.sort_indices()
    return adj


def load_graph(edge_list: Sequence[tuple[int, int]] | np.ndarray) -> Graph:
    """Build a :class:`Graph` from pairs of arbitrary non-negative integer ids.

    Ids are remapped to ``0..n-1`` in order of first appearance.
    """
    arr = np.asarray(edge_list, dtype=np.int64)
    if arr.size == 0:
        raise EmptyInput("edge list is empty")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise EdgeListFormatError("edge list must be a sequence of (u, v) pairs")
    if (arr < 0).any():
        raise EdgeListFormatError("node ids must be non-negative")

    loops = np.flatnonzero(arr[:, 0] == arr[:, 1])
    if len(loops):
        raise SelfLoop(f"self-loop on node {arr[loops[0], 0]}")

    flat = arr.ravel()
    uniq, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[order] = np.arange(len(uniq))
    edges = rank[inverse].reshape(-1, 2)
    ids = uniq[order]
    n = len(ids)

    canon = np.sort(edges, axis=1)
    keys = canon[:, 0] * n + canon[:, 1]
    uk, counts = np.unique(keys, return_counts=True)
    if (counts > 1).any():
        dup = uk[np.argmax(counts > 1)]
        a, b = ids[dup // n], ids[dup % n]
        raise DuplicateEdge(f"edge ({a}, {b}) appears more than once")

    adj = _adjacency(n, edges)
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp > 1:
        raise DisconnectedGraph(f"graph has {ncomp} connected components")
    return Graph(n=n, edges=_readonly(edges), ids=_readonly(ids), adj=adj)


def read_edge_list(path: str | Path) -> np.ndarray:
    """Parse a whitespace-separated edge-list file.

    Lines starting with ``#`` or ``%`` and blank lines are skipped. Only the
    first two columns are read.
    """
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s[0] in "#%":
                continue
            parts = s.split()
            if len(parts) < 2:
                raise EdgeListFormatError(f"{path}:{lineno}: expected two node ids")
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise EdgeListFormatError(f"{path}:{lineno}: non-integer node id") from None
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def load_graph_file(path: str | Path) -> Graph:
    return load_graph(read_edge_list(path))


def write_edge_list(g: Graph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in g.serialize():
            fh.write(f"{a} {b}\n")


@dataclass(frozen=True, eq=False)
class Partition:
    """Split of the nodes into 0-leaders, 1-leaders and followers.

    ``followers`` is sorted ascending; ``local[v]`` is the position of node ``v``
    in ``followers`` (``-1`` for leaders).
    """

    s0: np.ndarray
    s1: np.ndarray
    followers: np.ndarray
    local: np.ndarray

    @property
    def nf(self) -> int:
        return len(self.followers)

    @property
    def s(self) -> int:
        return len(self.s0) + len(self.s1)

    def swapped(self) -> "Partition":
        """Same partition with the roles of the two leader sets exchanged."""
        return Partition(s0=self.s1, s1=self.s0, followers=self.followers, local=self.local)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return (
            np.array_equal(self.s0, other.s0)
            and np.array_equal(self.s1, other.s1)
            and np.array_equal(self.followers, other.followers)
        )

    __hash__ = None


def make_partition(g: Graph, s0: Iterable[int], s1: Iterable[int]) -> Partition:
    """Partition ``g`` given internal node indices of both leader sets."""
    s0 = np.unique(np.asarray(list(s0), dtype=np.int64))
    s1 = np.unique(np.asarray(list(s1), dtype=np.int64))
    for arr in (s0, s1):
        if len(arr) and (arr[0] < 0 or arr[-1] >= g.n):
            raise UnknownNode(f"leader index out of range [0, {g.n})")
    if len(s0) == 0:
        raise EmptyS0("the set of 0-leaders is empty")
    if len(s1) == 0:
        raise EmptyS1("the set of 1-leaders is empty")
    both = np.intersect1d(s0, s1)
    if len(both):
        raise OverlappingLeaderSets(f"node {both[0]} is in both leader sets")
    is_leader = np.zeros(g.n, dtype=bool)
    is_leader[s0] = True
    is_leader[s1] = True
    followers = np.flatnonzero(~is_leader)
    if len(followers) == 0:
        raise NoFollowers("every node is a leader")
    local = np.full(g.n, -1, dtype=np.int64)
    local[followers] = np.arange(len(followers))
    return Partition(
        s0=_readonly(s0), s1=_readonly(s1), followers=_readonly(followers), local=_readonly(local)
    )


def random_partition(g: Graph, n0: int, n1: int, seed: int) -> Partition:
    """Draw ``n0`` 0-leaders and ``n1`` 1-leaders uniformly without replacement."""
    if n0 < 1 or n1 < 1:
        raise TooManyLeaders("need at least one leader on each side")
    if n0 + n1 >= g.n:
        raise TooManyLeaders(f"{n0}+{n1} leaders leave no follower among {g.n} nodes")
    pick = np.random.default_rng(seed).choice(g.n, size=n0 + n1, replace=False)
    return make_partition(g, pick[:n0], pick[n0:])


class CandidateEdge(NamedTuple):
    leader: int
    follower: int


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Admissible (1-leader, follower) edges.

    Stored column-wise; ``local`` holds each follower's local index. The order is
    follower-major, then leader, and is the tie-breaking order everywhere
    downstream.
    """

    leader: np.ndarray
    follower: np.ndarray
    local: np.ndarray
    eta: float

    def __len__(self) -> int:
        return len(self.leader)

    def __getitem__(self, i: int) -> CandidateEdge:
        return CandidateEdge(int(self.leader[i]), int(self.follower[i]))

    def __iter__(self) -> Iterator[CandidateEdge]:
        for a, f in zip(self.leader.tolist(), self.follower.tolist()):
            yield CandidateEdge(a, f)

    @property
    def edges(self) -> list[CandidateEdge]:
        return list(self)

    def subset(self, idx) -> "CandidateSet":
        idx = np.asarray(idx, dtype=np.int64)
        return CandidateSet(self.leader[idx], self.follower[idx], self.local[idx], self.eta)


def check_eta(eta: float) -> None:
    if not 0.5 < eta < 1.0:
        raise EtaOutOfRange(f"eta must lie in (1/2, 1), got {eta}")


def build_candidate_set(g: Graph, p: Partition, x_inf: np.ndarray, eta: float) -> CandidateSet:
    """Candidate edges for followers with no 1-leader neighbour and opinion below ``eta``.

    ``x_inf`` are the equilibrium follower opinions of the original graph.
    """
    check_eta(eta)
    x_inf = np.asarray(x_inf, dtype=float)
    if x_inf.shape != (p.nf,):
        raise ValueError(f"x_inf must have one entry per follower ({p.nf})")

    is_s1 = np.zeros(g.n, dtype=np.int64)
    is_s1[p.s1] = 1
    touches_s1 = (g.adj @ is_s1) > 0
    ok = (~touches_s1[p.followers]) & (x_inf < eta)
    loc = np.flatnonzero(ok)
    ns1 = len(p.s1)
    local = np.repeat(loc, ns1)
    leader = np.tile(p.s1, len(loc))
    follower = p.followers[local]
    return CandidateSet(
        leader=_readonly(leader.astype(np.int64)),
        follower=_readonly(follower.astype(np.int64)),
        local=_readonly(local.astype(np.int64)),
        eta=float(eta),
    )
