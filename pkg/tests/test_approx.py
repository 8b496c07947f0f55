import warnings

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opinionmax.approx import ApproxConfig, estimate_follower_gains, opinion_comp, select_approx
from opinionmax.equilibrium import equilibrium, objective_after
from opinionmax.errors import EpsOutOfRange, EtaOutOfRange
from opinionmax.exact import follower_gains, select_exact
from opinionmax.graph import build_candidate_set, make_partition
from opinionmax.linalg import PAPER_STRICT, build_follower_system, dense_inverse

from conftest import from_nx, random_instance


def with_candidates(g, p, eta=0.9):
    sys = build_follower_system(g, p)
    return sys, build_candidate_set(g, p, equilibrium(sys).x_followers, eta)


def test_config_validation():
    with pytest.raises(EpsOutOfRange):
        ApproxConfig(eps=0.5)
    with pytest.raises(EpsOutOfRange):
        ApproxConfig(eps=0.0)
    with pytest.raises(EtaOutOfRange):
        ApproxConfig(eps=0.3, eta=0.4)
    with pytest.raises(ValueError):
        ApproxConfig(eps=0.3, tolerance_mode="loose")


def test_p4_estimate(p4):
    g, p = p4
    sys, q = with_candidates(g, p)
    est = opinion_comp(g, p, q, ApproxConfig(eps=0.3, seed=0))
    assert [e.edge for e in est] == [(3, 1)]
    assert est[0].gain == pytest.approx(0.4, rel=0.3)


def test_p4_estimate_strict_mode(p4):
    g, p = p4
    sys, q = with_candidates(g, p)
    est = opinion_comp(g, p, q, ApproxConfig(eps=0.3, tolerance_mode=PAPER_STRICT))
    assert est[0].gain == pytest.approx(0.4, rel=0.3)


def test_opinion_comp_empty(p4):
    g, p = p4
    _, q = with_candidates(g, p)
    with pytest.raises(ValueError):
        opinion_comp(g, p, q.subset([]), ApproxConfig(eps=0.3))


def test_estimates_reproducible_and_seeded():
    g = from_nx(nx.barabasi_albert_graph(120, 2, seed=3))
    p = make_partition(g, [0, 1], [2, 3])
    sys = build_follower_system(g, p)
    cfg = ApproxConfig(eps=0.3, seed=5)
    a = estimate_follower_gains(sys, cfg, key=(0,))
    b = estimate_follower_gains(sys, cfg, key=(0,))
    c = estimate_follower_gains(sys, ApproxConfig(eps=0.3, seed=6), key=(0,))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.3, 0.2]))
def test_estimates_within_eps_mostly(seed, eps):
    g, p = random_instance(np.random.default_rng(seed), 30, 80, leaders=(2, 4))
    sys = build_follower_system(g, p)
    exact = follower_gains(dense_inverse(sys).matrix, sys.b_vec)
    est = estimate_follower_gains(sys, ApproxConfig(eps=eps, seed=seed), key=(0,))
    ok = exact > 1e-9
    rel = np.abs(est[ok] - exact[ok]) / exact[ok]
    assert np.mean(rel <= eps) >= 0.9


def test_large_sketch_close_to_exact():
    g = from_nx(nx.barabasi_albert_graph(150, 2, seed=8))
    p = make_partition(g, [0, 5], [1, 9])
    sys = build_follower_system(g, p)
    exact = follower_gains(dense_inverse(sys).matrix, sys.b_vec)
    est = estimate_follower_gains(sys, ApproxConfig(eps=0.3, sketch_dim=20_000), key=(0,))
    np.testing.assert_allclose(est, exact, rtol=0.05, atol=1e-12)


def test_select_approx_p4(p4):
    g, p = p4
    _, q = with_candidates(g, p)
    res = select_approx(g, p, q, 1, ApproxConfig(eps=0.3))
    assert res.chosen == [(3, 1)]
    np.testing.assert_allclose(res.h_trace, [1.0, 1.4], atol=1e-8)
    assert res.algorithm_tag == "approx"


def test_select_approx_eta_mismatch_warns(p4):
    g, p = p4
    _, q = with_candidates(g, p, eta=0.9)
    with pytest.warns(UserWarning):
        select_approx(g, p, q, 1, ApproxConfig(eps=0.3, eta=0.8))


def test_select_approx_trace_and_bound():
    g = from_nx(nx.barabasi_albert_graph(200, 2, seed=2))
    p = make_partition(g, [0, 3], [1, 4])
    sys, q = with_candidates(g, p)
    k = 10
    exact = select_exact(g, p, q, k)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = select_approx(g, p, q, k, ApproxConfig(eps=0.3))
    assert len(res.chosen) == k and len(set(res.chosen)) == k
    assert set(res.chosen) <= set(q)
    got = [objective_after(sys, res.chosen[:r]) for r in range(k + 1)]
    np.testing.assert_allclose(res.h_trace, got, atol=1e-7)
    assert np.all(np.diff(res.h_trace) >= -1e-9)
    assert res.gain >= (1 - 0.3) * exact.gain


def test_select_approx_deterministic_across_threads():
    g = from_nx(nx.barabasi_albert_graph(150, 2, seed=4))
    p = make_partition(g, [0, 3], [1, 4])
    _, q = with_candidates(g, p)
    a = select_approx(g, p, q, 4, ApproxConfig(eps=0.25, seed=1, threads=1))
    b = select_approx(g, p, q, 4, ApproxConfig(eps=0.25, seed=1, threads=3))
    assert a.chosen == b.chosen
    assert a.gains == b.gains
    assert a.h_trace == b.h_trace
