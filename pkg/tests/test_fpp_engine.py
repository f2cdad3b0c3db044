"""Event-driven race engine against exact jump-chain enumeration."""

import math
from fractions import Fraction

import numpy as np
import pytest

from fpprace import fpp_engine as fe
from fpprace import graph_providers as gp
from fpprace import stats

from _oracles import race_count_distribution


def _path_graph(k):
    """Path 0-1-...-(k-1) padded with degree-preserving... just a Multigraph-free
    stand-in: a lightweight object exposing spreading_csr."""
    edges = [(i, i + 1) for i in range(k - 1)]
    return _ExplicitGraph(k, edges)


class _ExplicitGraph:
    """Arbitrary multigraph for tests, CSR built the same way the engine expects."""

    def __init__(self, N, edges):
        self.N = N
        self.edges = list(edges)
        src, dst = [], []
        for u, v in self.edges:
            if u == v:
                continue
            src.extend((u, v))
            dst.extend((v, u))
        order = np.argsort(np.array(src, dtype=np.int64), kind="stable")
        self._indices = np.array(dst, dtype=np.int64)[order]
        counts = np.bincount(np.array(src, dtype=np.int64), minlength=N)
        self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    def spreading_csr(self):
        return self._indptr, self._indices


def _empirical_blue_law(graph, blue, red, beta, trials, seed):
    counts = {}
    for i in range(trials):
        res = fe.simulate_race(
            graph,
            fe.RaceConfig(beta=beta, blue_seeds=blue, red_seeds=red),
            rng=seed + i,
        )
        counts[res.B_bar] = counts.get(res.B_bar, 0) + 1
    return {k: v / trials for k, v in counts.items()}


# ----------------------------------------------------------- configuration


def test_race_config_validation():
    fe.RaceConfig(beta=1.0, blue_seeds=(0,), red_seeds=(1,))
    with pytest.raises(ValueError):
        fe.RaceConfig(beta=0.0, blue_seeds=(0,), red_seeds=(1,))
    with pytest.raises(ValueError):
        fe.RaceConfig(beta=1.0, blue_seeds=(), red_seeds=(1,))
    with pytest.raises(ValueError):
        fe.RaceConfig(beta=1.0, blue_seeds=(0,), red_seeds=(0,))  # overlap
    with pytest.raises(ValueError):
        fe.RaceConfig(beta=1.0, blue_seeds=(0, 0), red_seeds=(1,))  # duplicate
    with pytest.raises(ValueError):
        fe.RaceConfig(beta=1.0, blue_seeds=(0,), red_seeds=())  # red needs head start
    fe.RaceConfig(beta=1.0, blue_seeds=(0,), red_seeds=(), head_start=fe.HeadStart.duration(1.0))


def test_head_start_constructors():
    assert fe.HeadStart.none().kind == "none"
    assert fe.HeadStart.until_blue_count(5).value == 5
    assert fe.HeadStart.duration(2.5).value == 2.5
    with pytest.raises(ValueError):
        fe.HeadStart.until_blue_count(0)
    with pytest.raises(ValueError):
        fe.HeadStart.duration(-1.0)


# ------------------------------------------------------- exact distributions


def test_path3_middle_vertex_law():
    # blue at 0, red at 2: the middle vertex goes blue w.p. beta/(beta+1)
    for beta in (0.5, 1.0, 2.0):
        graph = _path_graph(3)
        law = _empirical_blue_law(graph, (0,), (2,), beta, 4000, seed=100)
        p_blue = law.get(2, 0.0)  # B_bar = 2 iff middle went blue
        assert p_blue == pytest.approx(beta / (beta + 1), abs=0.03), f"beta={beta}"


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_star_capture_law_exact(beta):
    # star: center 0, leaves 1..4; blue seed at leaf 1, red at leaf 2
    edges = [(0, 1), (0, 2), (0, 3), (0, 4)]
    graph = _ExplicitGraph(5, edges)
    exact = race_count_distribution(5, edges, [1], [2], Fraction(beta))
    empirical = _empirical_blue_law(graph, (1,), (2,), beta, 6000, seed=7)
    target = {k: float(v) for k, v in exact.items()}
    assert stats.tv_distance(empirical, target) < 0.03


@pytest.mark.parametrize("beta", [0.5, 2.0])
def test_parallel_edges_double_rate(beta):
    # 0 =(x2)= 1 - 2: parallel edges double the blue crossing rate to vertex 1
    edges = [(0, 1), (0, 1), (1, 2)]
    graph = _ExplicitGraph(3, edges)
    exact = race_count_distribution(3, edges, [0], [2], Fraction(beta))
    empirical = _empirical_blue_law(graph, (0,), (2,), beta, 6000, seed=17)
    target = {k: float(v) for k, v in exact.items()}
    assert stats.tv_distance(empirical, target) < 0.03


def test_self_loop_inert():
    # a self-loop at the blue seed must not change the race at all
    edges_plain = [(0, 1), (1, 2)]
    edges_loop = [(0, 0), (0, 1), (1, 2)]
    exact_plain = race_count_distribution(3, edges_plain, [0], [2], Fraction(1))
    exact_loop = race_count_distribution(3, edges_loop, [0], [2], Fraction(1))
    assert exact_plain == exact_loop
    graph = _ExplicitGraph(3, edges_loop)
    empirical = _empirical_blue_law(graph, (0,), (2,), 1.0, 4000, seed=23)
    target = {k: float(v) for k, v in exact_plain.items()}
    assert stats.tv_distance(empirical, target) < 0.03


def test_five_leaf_star_all_blue_seedings():
    # center seed vs leaf seed on a 5-leaf star, enumerated exactly
    edges = [(0, i) for i in range(1, 6)]
    graph = _ExplicitGraph(6, edges)
    for blue, red in [((0,), (1,)), ((1,), (2,))]:
        exact = race_count_distribution(6, edges, list(blue), list(red), Fraction(3, 2))
        empirical = _empirical_blue_law(graph, blue, red, 1.5, 6000, seed=29)
        target = {k: float(v) for k, v in exact.items()}
        assert stats.tv_distance(empirical, target) < 0.03


# --------------------------------------------------------------- mechanics


def test_conservation_and_types():
    g = gp.make_torus(6, 2)
    res = fe.simulate_race(
        g, fe.RaceConfig(beta=2.0, blue_seeds=(0,), red_seeds=(35,)), rng=3
    )
    assert res.colors.dtype == np.int8
    assert res.B_bar + res.R_bar + res.U == res.N == 36
    assert res.U == 0  # connected graph: everything gets captured


def test_all_seeded_graph_never_steps():
    g = gp.make_torus(3, 1)
    res = fe.simulate_race(
        g, fe.RaceConfig(beta=1.0, blue_seeds=(0, 1), red_seeds=(2,)), rng=5
    )
    assert res.B_bar == 2 and res.R_bar == 1 and res.U == 0


def test_disconnected_leftovers_stay_uncolored():
    # two disjoint edges; seeds only touch the first component
    graph = _ExplicitGraph(4, [(0, 1), (2, 3)])
    res = fe.simulate_race(
        graph, fe.RaceConfig(beta=1.0, blue_seeds=(0,), red_seeds=(1,)), rng=9
    )
    assert res.U == 2
    assert res.colors[2] == fe.UNCOLORED and res.colors[3] == fe.UNCOLORED


def test_capture_times_recorded_monotone_on_path():
    graph = _path_graph(6)
    res = fe.simulate_race(
        graph,
        fe.RaceConfig(beta=1.0, blue_seeds=(0,), red_seeds=(), record_times=True,
                      head_start=fe.HeadStart.duration(0.0)),
        rng=13,
    )
    times = res.capture_times
    assert times[0] == 0.0
    colored = res.colors != fe.UNCOLORED
    assert np.all(np.isfinite(times[colored]))
    # along the path from the seed, capture times increase
    finite = [t for t in times if math.isfinite(t)]
    assert all(a < b for a, b in zip(finite, finite[1:]))


def test_determinism_same_seed():
    g = gp.make_torus(8, 2)
    cfg = fe.RaceConfig(beta=1.3, blue_seeds=(0,), red_seeds=(37,))
    a = fe.simulate_race(g, cfg, rng=99)
    b = fe.simulate_race(g, cfg, rng=99)
    assert np.array_equal(a.colors, b.colors)


def test_headstart_count_reaches_target():
    g = gp.make_torus(10, 2)
    res = fe.simulate_race(
        g,
        fe.RaceConfig(
            beta=1.0,
            blue_seeds=(0,),
            red_seeds=(55,),
            head_start=fe.HeadStart.until_blue_count(20),
        ),
        rng=21,
    )
    assert res.B_bar >= 20
    assert res.B_bar + res.R_bar == 100


def test_headstart_duration_zero_equivalent_to_none():
    g = gp.make_torus(6, 2)
    cfg0 = fe.RaceConfig(beta=1.0, blue_seeds=(0,), red_seeds=(20,),
                         head_start=fe.HeadStart.duration(0.0))
    res = fe.simulate_race(g, cfg0, rng=31)
    assert res.B_bar + res.R_bar == 36


# --------------------------------------------------- experiment wrappers


def test_torus_experiment_basics():
    res = fe.simulate_torus_experiment(12, 2, 0.1, 1.5, rng=77)
    N = 144
    assert res.B_bar + res.R_bar + res.U == N
    assert res.B_bar >= math.ceil(0.1 * N)
    assert res.R_bar >= 1
    with pytest.raises(ValueError):
        fe.simulate_torus_experiment(12, 2, 1.5, 1.0, rng=1)


def test_headstart_race_on_rrg():
    g = gp.sample_configuration_multigraph(400, 4, np.random.default_rng(2))
    res = fe.simulate_headstart_race(g, 1.5, 40, rng=4)
    assert res.B_bar >= 40
    assert res.B_bar + res.R_bar + res.U == 400
    with pytest.raises(ValueError):
        fe.simulate_headstart_race(g, 1.5, 0, rng=4)
    with pytest.raises(ValueError):
        fe.simulate_headstart_race(g, 1.5, 401, rng=4)


def test_race_on_configuration_model_wrapper():
    res = fe.race_on_configuration_model(200, 3, 2, 3, 1.0, rng=6)
    assert res.B_bar + res.R_bar + res.U == 200
    assert res.B_bar >= 2 and res.R_bar >= 3
    with pytest.raises(ValueError):
        fe.race_on_configuration_model(200, 3, 0, 3, 1.0, rng=6)


def test_config_race_trials_kernel_matches_python_wrapper_law():
    """In-kernel batch and python-level wrapper sample the same distribution."""
    N, d, beta, trials = 10, 3, 1.0, 8000
    Bk, Rk, Uk = fe.config_race_trials(N, d, 1, 1, beta, trials, 404)
    kernel_law = {}
    for v in Bk:
        kernel_law[int(v)] = kernel_law.get(int(v), 0) + 1 / trials
    wrapper_counts = {}
    for i in range(trials):
        res = fe.race_on_configuration_model(N, d, 1, 1, beta, rng=derive(505, i))
        wrapper_counts[res.B_bar] = wrapper_counts.get(res.B_bar, 0) + 1
    wrapper_law = {k: v / trials for k, v in wrapper_counts.items()}
    assert stats.tv_distance(kernel_law, wrapper_law) < 0.03
    assert np.all(Bk + Rk + Uk == N)


def derive(master, i):
    from fpprace._rng import derive_seed

    return derive_seed(master, i)


def test_config_race_trials_chunk_invariance():
    whole = fe.config_race_trials(12, 3, 1, 1, 2.0, 30, 717)
    first = fe.config_race_trials(12, 3, 1, 1, 2.0, 10, 717)
    second = fe.config_race_trials(12, 3, 1, 1, 2.0, 20, 717, trial_offset=10)
    for w, f, s in zip(whole, first, second):
        assert np.array_equal(w, np.concatenate([f, s]))


def test_coloring_csv_output(tmp_path):
    g = gp.make_torus(4, 2)
    res = fe.simulate_race(
        g,
        fe.RaceConfig(beta=1.0, blue_seeds=(0,), red_seeds=(9,), record_times=True),
        rng=8,
    )
    path = tmp_path / "coloring.csv"
    res.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "vertex,color,capture_time"
    assert len(lines) == 17
