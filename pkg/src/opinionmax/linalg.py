"""Numerical kernels on the follower block of the Laplacian.

The follower block ``L_F`` is kept implicitly as ``Bbar^T Bbar + W`` where
``Bbar`` is the signed incidence matrix of the follower-induced subgraph and
``W`` counts leader neighbours of each follower. Everything here works on that
representation: dense inversion with rank-one updates for the exact greedy,
a preconditioned conjugate-gradient solver, and random-sign sketches used to
estimate the diagonal of ``L_F^{-1}``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import EpsOutOfRange, InverseCheckFailed, NoConvergence, SizeCapExceeded
from .graph import Graph, Partition

PAPER_STRICT = "paper-strict"
PRACTICAL = "practical"
TOLERANCE_MODES = (PAPER_STRICT, PRACTICAL)

DENSE_CAP = 20000
PRACTICAL_DELTA_FLOOR = 1e-10
# JL constant used by the practical sketch dimension ceil(c * ln(nf) / eps^2).
PRACTICAL_JL_CONSTANT = 2.0

# When set, every solve with nf <= 500 is checked against a dense solve in the
# L_F energy norm. The test suite turns this on.
CHECK_SOLVES_ENV = "OPINIONMAX_CHECK_SOLVES"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FollowerSystem:
    """Follower-block linear system of one graph/partition.

    Attributes
    ----------
    n : int
        Node count of the whole graph.
    followers : ndarray
        Global node ids of the followers; position is the local index.
    bar_edges : ndarray, shape (mbar, 2)
        Follower-follower edges in local indices, oriented head -> tail.
    w_diag : ndarray
        Number of leader neighbours (either side) of each follower.
    b_vec : ndarray
        Number of 1-leader neighbours of each follower.
    """

    n: int
    followers: np.ndarray
    bar_edges: np.ndarray
    w_diag: np.ndarray
    b_vec: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def nf(self) -> int:
        return len(self.followers)

    @property
    def mbar(self) -> int:
        return len(self.bar_edges)

    def local_of(self, node: int) -> int:
        pos = np.searchsorted(self.followers, node)
        if pos >= self.nf or self.followers[pos] != node:
            raise ValueError(f"node {node} is not a follower")
        return int(pos)

    def incidence(self) -> sp.csr_matrix:
        """Signed incidence matrix ``Bbar`` (mbar x nf)."""
        if "inc" not in self._cache:
            m = self.mbar
            rows = np.repeat(np.arange(m), 2)
            cols = self.bar_edges.ravel()
            vals = np.tile([1.0, -1.0], m)
            self._cache["inc"] = sp.csr_matrix((vals, (rows, cols)), shape=(m, self.nf))
        return self._cache["inc"]

    def laplacian(self) -> sp.csr_matrix:
        """Sparse ``L_F``."""
        if "lap" not in self._cache:
            u, v = self.bar_edges[:, 0], self.bar_edges[:, 1]
            deg = np.bincount(u, minlength=self.nf) + np.bincount(v, minlength=self.nf)
            rows = np.concatenate([u, v, np.arange(self.nf)])
            cols = np.concatenate([v, u, np.arange(self.nf)])
            vals = np.concatenate([-np.ones(2 * self.mbar), deg + self.w_diag])
            lap = sp.csr_matrix((vals, (rows, cols)), shape=(self.nf, self.nf))
            lap.sum_duplicates()
            lap.sort_indices()
            self._cache["lap"] = lap
        return self._cache["lap"]

    def dense(self) -> np.ndarray:
        return self.laplacian().toarray()

    def add_leader_edges(self, locals_: Sequence[int], to_s1: bool = True) -> "FollowerSystem":
        """System of the graph with extra leader-follower edges (a new object)."""
        w = self.w_diag.copy()
        b = self.b_vec.copy()
        idx = np.asarray(locals_, dtype=np.int64)
        np.add.at(w, idx, 1.0)
        if to_s1:
            np.add.at(b, idx, 1.0)
        return FollowerSystem(self.n, self.followers, self.bar_edges, _readonly(w), _readonly(b))


def build_follower_system(g: Graph, p: Partition) -> FollowerSystem:
    e = g.edges
    lu, lv = p.local[e[:, 0]], p.local[e[:, 1]]
    both = (lu >= 0) & (lv >= 0)
    bar_edges = np.stack([lu[both], lv[both]], axis=1)

    is_s1 = np.zeros(g.n, dtype=bool)
    is_s1[p.s1] = True
    w = np.zeros(p.nf)
    b = np.zeros(p.nf)
    # exactly one endpoint is a follower
    for f_loc, other in ((lu, e[:, 1]), (lv, e[:, 0])):
        sel = (f_loc >= 0) & (p.local[other] < 0)
        np.add.at(w, f_loc[sel], 1.0)
        np.add.at(b, f_loc[sel & is_s1[other]], 1.0)
    return FollowerSystem(
        n=g.n,
        followers=p.followers,
        bar_edges=_readonly(bar_edges),
        w_diag=_readonly(w),
        b_vec=_readonly(b),
    )


# ---------------------------------------------------------------------------
# dense route


@dataclass(frozen=True, eq=False)
class DenseInverse:
    matrix: np.ndarray

    @property
    def nf(self) -> int:
        return self.matrix.shape[0]


def trace_bound(n: int) -> float:
    """Upper bound on ``trace(L_F^{-1})`` for a connected graph on ``n`` nodes."""
    return n * (n - 1) / 2.0


def check_inverse(inv: np.ndarray, n: int, rtol: float = 1e-9) -> None:
    """Structural sanity checks that any ``L_F^{-1}`` must pass.

    Entries are nonnegative (strictly positive when the follower subgraph is
    connected), the diagonal is at least ``1/n`` and the trace is at most
    ``n (n - 1) / 2``. The last bound holds because ``(L_F^{-1})_{ii}`` is the
    effective resistance from ``i`` to the leader set, which never exceeds the
    hop distance; a path of followers hanging off one leader attains it.
    """
    scale = np.abs(inv).max()
    if inv.min() < -rtol * scale:
        raise InverseCheckFailed("inverse has negative entries")
    if np.diag(inv).min() < (1.0 / n) * (1 - rtol):
        raise InverseCheckFailed("inverse diagonal below 1/n")
    if np.trace(inv) > trace_bound(n) * (1 + rtol):
        raise InverseCheckFailed("inverse trace above n(n-1)/2")


def dense_inverse(sys: FollowerSystem, cap: int = DENSE_CAP) -> DenseInverse:
    if sys.nf > cap:
        raise SizeCapExceeded(f"{sys.nf} followers exceed the dense-inverse cap of {cap}")
    lap = sys.dense()
    c, low = scipy.linalg.cho_factor(lap, lower=True, check_finite=False)
    inv = scipy.linalg.cho_solve((c, low), np.eye(sys.nf), check_finite=False)
    inv = 0.5 * (inv + inv.T)
    check_inverse(inv, sys.n)
    return DenseInverse(inv)


def sherman_morrison_update(inv: DenseInverse, j: int, inplace: bool = False) -> DenseInverse:
    """Inverse of ``L_F + e_j e_j^T`` from the inverse of ``L_F``."""
    m = inv.matrix if inplace else inv.matrix.copy()
    col = m[:, j].copy()
    m -= np.outer(col, col) / (1.0 + col[j])
    return inv if inplace else DenseInverse(m)


# ---------------------------------------------------------------------------
# iterative route


@dataclass(frozen=True)
class SolveTolerances:
    delta1: float
    delta2: float
    delta3: float
    mode: str = PRACTICAL

    @property
    def certified(self) -> bool:
        return self.mode == PAPER_STRICT


def solve_tolerances(n: int, eps: float, eta: float, mode: str = PRACTICAL) -> SolveTolerances:
    """Solver accuracies for the numerator and denominator estimates.

    ``paper-strict`` uses the worst-case formulas as they are; ``practical``
    floors each one at 1e-10.
    """
    if mode not in TOLERANCE_MODES:
        raise ValueError(f"unknown tolerance mode {mode!r}")
    root = math.sqrt(6.0 * (n * n - 1))
    d1 = eps / (2.0 * n * n * root)
    d2 = (1.0 - eta) * eps / (n * n * root)
    e12 = eps / 12.0
    d3 = eps / (72.0 * n * n) * math.sqrt(6.0 * (1 - e12) / ((1 + e12) * (n * n - 1)))
    if mode == PRACTICAL:
        d1, d2, d3 = (max(d, PRACTICAL_DELTA_FLOOR) for d in (d1, d2, d3))
    return SolveTolerances(d1, d2, d3, mode)


def _certified_residual_tol(sys: FollowerSystem, delta: float) -> float:
    # ||x - x*||_L / ||x*||_L <= sqrt(lmax/lmin) * ||r|| / ||b||, with
    # lmax <= 2 max diag and lmin >= 1/trace(L^-1) >= 1/trace_bound(n).
    lap = sys.laplacian()
    lmax = 2.0 * lap.diagonal().max()
    lmin = 1.0 / trace_bound(sys.n)
    return delta * math.sqrt(lmin / lmax)


def _pcg(lap: sp.csr_matrix, dinv: np.ndarray, rhs: np.ndarray, tol: float, maxiter: int):
    """Jacobi-preconditioned CG on every column of ``rhs`` at once.

    Columns stop individually once ``||r|| <= tol * ||b||``.
    """
    nf, ncol = rhs.shape
    x = np.zeros((nf, ncol))
    bnorm = np.sqrt(np.einsum("ij,ij->j", rhs, rhs))
    active = np.flatnonzero(bnorm > 0)
    if not len(active):
        return x, 0
    target = tol * bnorm[active]
    r = rhs[:, active].copy()
    xa = np.zeros_like(r)
    d = dinv[:, None]
    z = r * d
    pdir = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    it = 0
    while True:
        res = np.sqrt(np.einsum("ij,ij->j", r, r))
        done = res <= target
        if done.any():
            x[:, active[done]] = xa[:, done]
            keep = ~done
            active, target, rz = active[keep], target[keep], rz[keep]
            if not len(active):
                return x, it
            r, xa, pdir = r[:, keep], xa[:, keep], pdir[:, keep]
        if it >= maxiter:
            raise NoConvergence(
                f"CG did not reach relative residual {tol:.1e} in {maxiter} iterations "
                f"(worst {np.max(res[~done] / (target / tol)):.2e})"
            )
        ap = lap @ pdir
        alpha = rz / np.einsum("ij,ij->j", pdir, ap)
        xa += alpha * pdir
        r -= alpha * ap
        z = r * d
        rz_new = np.einsum("ij,ij->j", r, z)
        pdir = z + (rz_new / rz) * pdir
        rz = rz_new
        it += 1


def _check_against_dense(
    sys: FollowerSystem, rhs: np.ndarray, x: np.ndarray, delta: float, certified: bool
) -> None:
    lap = sys.dense()
    if not certified:
        # only the residual is promised
        res = np.linalg.norm(lap @ x - rhs, axis=0)
        if (res > delta * np.linalg.norm(rhs, axis=0) * (1 + 1e-6) + 1e-14).any():
            raise NoConvergence("solve violated its residual bound")
        return
    ref = scipy.linalg.solve(lap, rhs, assume_a="pos")
    err = x - ref
    err_e = np.sqrt(np.einsum("ij,ij->j", err, lap @ err))
    ref_e = np.sqrt(np.einsum("ij,ij->j", ref, lap @ ref))
    # slack for the rounding floor of the reference itself
    bad = err_e > delta * ref_e + 1e-12 * (1 + ref_e)
    if bad.any():
        worst = np.max(err_e[bad] / np.maximum(ref_e[bad], 1e-300))
        raise NoConvergence(f"solve violated its energy-norm bound: {worst:.2e} > {delta:.2e}")


def sdd_solve(
    sys: FollowerSystem,
    rhs: np.ndarray,
    delta: float,
    *,
    maxiter: int | None = None,
    certified: bool = False,
) -> np.ndarray:
    """Approximately solve ``L_F x = rhs`` (one vector or a block of columns).

    The stopping rule is the relative residual ``||L_F x - rhs|| / ||rhs|| <= delta``.
    With ``certified=True`` the residual target is shrunk by a bound on the
    condition number so that ``||x - x*||_{L_F} <= delta ||x*||_{L_F}`` holds
    for certain.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    rhs = np.asarray(rhs, dtype=float)
    vec = rhs.ndim == 1
    block = rhs[:, None] if vec else rhs
    if block.shape[0] != sys.nf:
        raise ValueError(f"rhs has {block.shape[0]} rows, system has {sys.nf}")
    if maxiter is None:
        maxiter = 10 * sys.nf + 200
    tol = _certified_residual_tol(sys, delta) if certified else delta
    lap = sys.laplacian()
    x, _ = _pcg(lap, 1.0 / lap.diagonal(), block, tol, maxiter)
    if sys.nf <= 500 and os.environ.get(CHECK_SOLVES_ENV):
        _check_against_dense(sys, block, x, delta, certified)
    return x[:, 0] if vec else x


# ---------------------------------------------------------------------------
# sketches


def check_eps(eps: float) -> None:
    if not 0.0 < eps < 0.5:
        raise EpsOutOfRange(f"eps must lie in (0, 1/2), got {eps}")


def sketch_dimension(nf: int, eps: float, mode: str = PRACTICAL, jl_constant: float | None = None) -> int:
    """Number of sketch rows.

    ``paper-strict``: ceil(24 ln(nf) / (eps/12)^2). ``practical``:
    ceil(c ln(nf) / eps^2) with ``c = jl_constant`` (default
    :data:`PRACTICAL_JL_CONSTANT`). Natural log in both; never below 1.
    """
    check_eps(eps)
    if mode == PAPER_STRICT:
        t = 24.0 * math.log(nf) / (eps / 12.0) ** 2
    elif mode == PRACTICAL:
        c = PRACTICAL_JL_CONSTANT if jl_constant is None else jl_constant
        t = c * math.log(nf) / eps**2
    else:
        raise ValueError(f"unknown tolerance mode {mode!r}")
    return max(1, math.ceil(t))


def _row_rng(seed: int, key: tuple, which: int, row: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(*key, which, row))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True, eq=False)
class SketchPair:
    """Two random-sign matrices with entries ``+-1/sqrt(t)``.

    ``px`` is ``t x mbar`` (applied to the incidence part), ``py`` is
    ``t x nf`` (applied to ``W^{1/2}``). Rows are generated on demand from
    ``(seed, key, which, row)`` so any row can be produced independently.
    Explicit matrices may be supplied instead.
    """

    t: int
    mbar: int
    nf: int
    seed: int = 0
    key: tuple = ()
    explicit_px: np.ndarray | None = None
    explicit_py: np.ndarray | None = None

    def _row(self, which: int, i: int) -> np.ndarray:
        explicit = self.explicit_px if which == 0 else self.explicit_py
        if explicit is not None:
            return np.asarray(explicit[i], dtype=float)
        width = self.mbar if which == 0 else self.nf
        bits = _row_rng(self.seed, self.key, which, i).integers(0, 2, size=width, dtype=np.int8)
        return (2.0 * bits - 1.0) / math.sqrt(self.t)

    def px_row(self, i: int) -> np.ndarray:
        return self._row(0, i)

    def py_row(self, i: int) -> np.ndarray:
        return self._row(1, i)

    @property
    def px(self) -> np.ndarray:
        return np.array([self.px_row(i) for i in range(self.t)]).reshape(self.t, self.mbar)

    @property
    def py(self) -> np.ndarray:
        return np.array([self.py_row(i) for i in range(self.t)]).reshape(self.t, self.nf)


def make_sketch(
    sys: FollowerSystem,
    eps: float,
    seed: int,
    *,
    mode: str = PRACTICAL,
    jl_constant: float | None = None,
    t: int | None = None,
    key: tuple = (),
) -> SketchPair:
    check_eps(eps)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if t is None:
        t = sketch_dimension(sys.nf, eps, mode, jl_constant)
    return SketchPair(t=int(t), mbar=sys.mbar, nf=sys.nf, seed=int(seed), key=tuple(key))


def _chunks(t: int, nf: int) -> list[tuple[int, int]]:
    # fixed by problem size only, so results do not depend on the worker count
    size = max(1, min(256, 4_000_000 // max(nf, 1)))
    return [(lo, min(lo + size, t)) for lo in range(0, t, size)]


def _projected_rhs(sys: FollowerSystem, sk: SketchPair, which: int, lo: int, hi: int) -> np.ndarray:
    """Columns ``lo..hi`` of ``(Px Bbar)^T`` or ``(Py W^{1/2})^T`` as an nf x c block."""
    out = np.empty((sys.nf, hi - lo))
    if which == 0:
        u, v = sys.bar_edges[:, 0], sys.bar_edges[:, 1]
        for c, i in enumerate(range(lo, hi)):
            row = sk.px_row(i)
            out[:, c] = np.bincount(u, weights=row, minlength=sys.nf) - np.bincount(
                v, weights=row, minlength=sys.nf
            )
    else:
        sw = np.sqrt(sys.w_diag)
        for c, i in enumerate(range(lo, hi)):
            out[:, c] = sk.py_row(i) * sw
    return out


def _solve_chunk(sys, sk, delta3, certified, which, lo, hi):
    rhs = _projected_rhs(sys, sk, which, lo, hi)
    if which == 0 and sys.mbar == 0:
        return np.zeros_like(rhs)
    return sdd_solve(sys, rhs, delta3, certified=certified)


def _map_chunks(fn, tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda a: fn(*a), tasks))


def sketched_rows(
    sys: FollowerSystem, sk: SketchPair, delta3: float, *, certified: bool = False, threads: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Approximate ``Px Bbar L_F^{-1}`` and ``Py W^{1/2} L_F^{-1}`` row by row.

    Returns two ``t x nf`` arrays. Meant for small systems; the greedy loop
    uses :func:`sketched_diagonal`, which never holds the full matrices.
    """
    tasks = [(w, lo, hi) for w in (0, 1) for lo, hi in _chunks(sk.t, sys.nf)]
    parts = _map_chunks(lambda w, lo, hi: _solve_chunk(sys, sk, delta3, certified, w, lo, hi), tasks, threads)
    half = len(parts) // 2
    xt = np.concatenate([p.T for p in parts[:half]], axis=0)
    yt = np.concatenate([p.T for p in parts[half:]], axis=0)
    return xt, yt


def sketched_diagonal(
    sys: FollowerSystem, sk: SketchPair, delta3: float, *, certified: bool = False, threads: int = 1
) -> np.ndarray:
    """``||Xt e_j||^2 + ||Yt e_j||^2`` for every follower ``j``.

    An estimate of ``diag(L_F^{-1})``; accumulated chunk by chunk in a fixed
    order.
    """

    def work(which, lo, hi):
        z = _solve_chunk(sys, sk, delta3, certified, which, lo, hi)
        return np.einsum("ij,ij->i", z, z)

    tasks = [(w, lo, hi) for w in (0, 1) for lo, hi in _chunks(sk.t, sys.nf)]
    total = np.zeros(sys.nf)
    for part in _map_chunks(work, tasks, threads):
        total += part
    return total
