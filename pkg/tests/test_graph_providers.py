"""Configuration-model sampler, torus builder, and edge-list round trip."""

import math
from collections import Counter

import numpy as np
import pytest

from fpprace import graph_providers as gp
from fpprace import stats


# -------------------------------------------------------------- multigraph


def test_multigraph_validation():
    edges = np.array([[0, 1], [0, 1], [2, 3], [2, 3], [0, 2], [1, 3]])
    g = gp.Multigraph(4, 3, edges)
    assert g.N == 4 and g.d == 3
    with pytest.raises(ValueError):
        gp.Multigraph(4, 3, edges[:5])  # wrong edge count
    bad = edges.copy()
    bad[5] = [1, 1]  # degree sequence breaks
    with pytest.raises(ValueError):
        gp.Multigraph(4, 3, bad)


def test_multigraph_adjacency_multiplicity_and_loops():
    # loop at 0, double edge 0-1, triple edge 2-3: all degrees 4
    edges = np.array([[0, 0], [0, 1], [0, 1], [1, 2], [1, 3], [2, 3], [2, 3], [2, 3]])
    g = gp.Multigraph(4, 4, edges)
    assert g.n_self_loops == 1
    assert not g.is_simple()
    assert dict(g.neighbors(0)) == {1: 2}  # loop excluded, multiplicity kept
    assert dict(g.neighbors(1)) == {0: 2, 2: 1, 3: 1}
    assert dict(g.neighbors(3)) == {2: 3, 1: 1}
    indptr, indices = g.spreading_csr()
    assert len(indices) == indptr[-1]
    # CSR lists each non-loop edge end twice in total
    non_loop = sum(1 for u, v in edges if u != v)
    assert len(indices) == 2 * non_loop
    # symmetric multiset
    pairs = Counter()
    for v in range(4):
        for w in indices[indptr[v] : indptr[v + 1]]:
            pairs[(v, int(w))] += 1
    for (v, w), count in pairs.items():
        assert pairs[(w, v)] == count


def test_simple_graph_detection():
    simple = np.array([[0, 1], [1, 2], [2, 3], [3, 0], [0, 2], [1, 3]])
    g = gp.Multigraph(4, 3, simple)
    assert g.is_simple()
    assert g.n_self_loops == 0


def test_sampler_degree_regularity():
    rng = np.random.default_rng(0)
    for d in (3, 4):
        g = gp.sample_configuration_multigraph(50, d, rng)
        degrees = np.zeros(50, dtype=int)
        for u, v in g.edges:
            degrees[u] += 1
            degrees[v] += 1
        assert np.all(degrees == d)


def test_sampler_uniform_over_pairings_tiny():
    # N=2, d=3: of the 15 perfect matchings of 6 half-edges, 6 give a triple
    # edge and 9 give a loop at each vertex plus one crossing edge.
    rng = np.random.default_rng(42)
    counts = Counter()
    trials = 6000
    for _ in range(trials):
        g = gp.sample_configuration_multigraph(2, 3, rng)
        canonical = tuple(sorted(tuple(sorted(e)) for e in g.edges.tolist()))
        counts[canonical] += 1
    empirical = {k: v / trials for k, v in counts.items()}
    expected = {
        ((0, 1), (0, 1), (0, 1)): 6 / 15,
        ((0, 0), (0, 1), (1, 1)): 9 / 15,
    }
    assert set(empirical) == set(expected)
    assert stats.tv_distance(empirical, expected) < 0.02


def test_sampler_reject_to_simple():
    rng = np.random.default_rng(7)
    for _ in range(5):
        g = gp.sample_configuration_multigraph(30, 3, rng, mode="reject_to_simple")
        assert g.is_simple()
    with pytest.raises(ValueError):
        gp.sample_configuration_multigraph(30, 3, rng, mode="nope")


def test_sampler_simplicity_rate_matches_asymptotic():
    # P(simple) -> exp((1 - d^2)/4); for d=3 that's exp(-2)
    rng = np.random.default_rng(11)
    n_samples = 1500
    simple = sum(
        gp.sample_configuration_multigraph(500, 3, rng).is_simple()
        for _ in range(n_samples)
    )
    rate = simple / n_samples
    assert rate == pytest.approx(math.exp(-2), abs=0.03)


def test_sampler_odd_total_rejected():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        gp.sample_configuration_multigraph(5, 3, rng)  # dN odd


# -------------------------------------------------------------------- torus


def test_torus_structure():
    t = gp.make_torus(5, 2)
    assert t.N == 25 and t.degree == 4
    nb = dict(t.neighbors(0))
    assert set(nb) == {1, 4, 5, 20}
    assert all(m == 1 for m in nb.values())


def test_torus_dim1_cycle():
    t = gp.make_torus(6, 1)
    assert t.N == 6 and t.degree == 2
    for v in range(6):
        assert set(dict(t.neighbors(v))) == {(v - 1) % 6, (v + 1) % 6}


def test_torus_csr_symmetric_and_regular():
    t = gp.make_torus(4, 3)
    indptr, indices = t.spreading_csr()
    assert len(indptr) == t.N + 1
    assert np.all(np.diff(indptr) == 6)
    pairs = Counter()
    for v in range(t.N):
        for w in indices[indptr[v] : indptr[v + 1]]:
            pairs[(v, int(w))] += 1
    for (v, w), count in pairs.items():
        assert pairs[(w, v)] == count
    # periodic wraparound along each axis
    nb0 = set(dict(t.neighbors(0)))
    assert 3 in nb0 and 12 in nb0 and 48 in nb0


def test_torus_validation():
    with pytest.raises(ValueError):
        gp.make_torus(2, 2)  # side too small
    with pytest.raises(ValueError):
        gp.make_torus(5, 0)


def test_generic_helpers_dispatch():
    t = gp.make_torus(4, 2)
    assert gp.neighbors(t, 0) == t.neighbors(0)
    rng = np.random.default_rng(1)
    g = gp.sample_configuration_multigraph(10, 3, rng)
    assert gp.neighbors(g, 0) == g.neighbors(0)
    ip1, ix1 = gp.spreading_csr(g)
    ip2, ix2 = g.spreading_csr()
    assert np.array_equal(ip1, ip2) and np.array_equal(ix1, ix2)


# ---------------------------------------------------------------- edge list


def test_edge_list_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    g = gp.sample_configuration_multigraph(20, 3, rng)
    path = tmp_path / "graph.txt"
    gp.save_edge_list(g, path)
    g2 = gp.load_edge_list(path)
    assert g2.N == g.N and g2.d == g.d
    assert np.array_equal(g.edges, g2.edges)
