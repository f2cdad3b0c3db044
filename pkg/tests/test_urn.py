"""Finite urn: exact DP, Monte Carlo, monitors, and growth-urn limits."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpprace import stats, urn

from _oracles import enumerate_urn_sigma


# ------------------------------------------------------------- scheme/state


def test_scheme_validation():
    urn.FiniteUrnScheme(a=2, b=3, S0=9, Z0=21)
    with pytest.raises(ValueError):
        urn.FiniteUrnScheme(a=3, b=3, S0=9, Z0=21)  # need a < b
    with pytest.raises(ValueError):
        urn.FiniteUrnScheme(a=0, b=3, S0=9, Z0=21)
    with pytest.raises(ValueError):
        urn.FiniteUrnScheme(a=2, b=3, S0=-1, Z0=21)
    with pytest.raises(ValueError):
        urn.FiniteUrnScheme(a=2, b=3, S0=0, Z0=0)


def test_markers_match_formulas():
    s = urn.FiniteUrnScheme(a=2, b=3, S0=100, Z0=900)
    M = 1000
    for t in (2.0, 4.0, 8.0):
        expect1 = math.floor(M * (1 - t * 900 ** (-2 / 3)) / 2)
        expect2 = math.floor(M * (1 - (1 / t) * 900 ** (-2 / 3)) / 2)
        assert s.n_marker_1(t) == max(0, min(expect1, M // 2))
        assert s.n_marker_2(t) == max(0, min(expect2, M // 2))
    assert s.n_marker_1(2.0) <= s.n_marker_2(2.0)


def test_urn_step_exact_transitions():
    scheme = urn.FiniteUrnScheme(a=2, b=3, S0=4, Z0=6)
    state = urn.UrnState(S=4, Z=6)
    # u below S/(S+Z) -> S-draw
    nxt = urn.urn_step(state, scheme, 0.399)
    assert (nxt.S, nxt.Z, nxt.absorbed) == (2, 6, False)
    # u above -> Z-draw
    nxt = urn.urn_step(state, scheme, 0.401)
    assert (nxt.S, nxt.Z, nxt.absorbed) == (5, 3, False)
    # infeasible S-draw freezes
    frozen = urn.urn_step(urn.UrnState(S=1, Z=6), scheme, 0.0)
    assert frozen.absorbed and frozen.S == 1 and frozen.Z == 6
    # infeasible Z-draw freezes
    frozen = urn.urn_step(urn.UrnState(S=4, Z=2), scheme, 0.99)
    assert frozen.absorbed and frozen.Z == 2
    with pytest.raises(ValueError):
        urn.urn_step(frozen, scheme, 0.5)


# ------------------------------------------------------------ DP exactness


@pytest.mark.parametrize(
    "a,b,S0,Z0",
    [(2, 3, 4, 6), (2, 3, 9, 21), (2, 4, 6, 12), (3, 5, 7, 10), (2, 3, 0, 9), (2, 3, 5, 0)],
)
def test_dp_sigma_matches_enumeration(a, b, S0, Z0):
    dp = urn.dp_urn_distribution(urn.FiniteUrnScheme(a=a, b=b, S0=S0, Z0=Z0))
    brute = enumerate_urn_sigma(a, b, S0, Z0)
    dp_pmf = dp.sigma_pmf()
    keys = set(dp_pmf) | set(brute)
    for k in keys:
        assert float(dp_pmf.get(k, 0.0)) == pytest.approx(
            float(brute.get(k, Fraction(0))), abs=1e-12
        ), f"sigma={k}"


def test_dp_mass_conserved_per_step():
    dp = urn.dp_urn_distribution(urn.FiniteUrnScheme(a=2, b=3, S0=9, Z0=21))
    for n in range(dp.n_steps + 1):
        total = sum(dp.joint_pmf(n).values())
        assert float(total) == pytest.approx(1.0, abs=1e-12)


def test_dp_supports_respect_invariants():
    scheme = urn.FiniteUrnScheme(a=2, b=3, S0=9, Z0=21)
    dp = urn.dp_urn_distribution(scheme)
    M = scheme.M
    for n in range(dp.n_steps + 1):
        for (S, Z), p in dp.joint_pmf(n).items():
            if p == 0:
                continue
            assert Z % 3 == 21 % 3 or Z >= 0  # Z always multiple of b below Z0
            assert (Z0br := 21 - Z) % 3 == 0
            assert S + Z <= M - 2 * 0  # never exceeds initial mass
            assert S >= 0 and Z >= 0


def test_exact_ratio_supermartingale():
    """E[Z_{n+1} | state] / (M - a(n+1)) <= Z_n / (M - a n) on feasible states.

    Checked in exact rational arithmetic over every state the DP reaches.
    """
    scheme = urn.FiniteUrnScheme(a=2, b=3, S0=9, Z0=21)
    a, b, M = scheme.a, scheme.b, scheme.M
    dp = urn.dp_urn_distribution(scheme)
    checked = 0
    for n in range(dp.n_steps):
        denom_now = M - a * n
        denom_next = M - a * (n + 1)
        if denom_next <= 0:
            break
        for (S, Z), p in dp.joint_pmf(n).items():
            if p == 0 or S + Z != denom_now or S < a or Z < b:
                continue  # skip frozen or infeasible states
            total = S + Z
            expected_next = (
                Fraction(S, total) * Z + Fraction(Z, total) * (Z - b)
            )
            assert expected_next * denom_now <= Fraction(Z) * denom_next
            checked += 1
    assert checked > 10


# -------------------------------------------------------------- Monte Carlo


def test_mc_sigma_matches_dp():
    scheme = urn.FiniteUrnScheme(a=2, b=3, S0=9, Z0=21)
    dp = urn.dp_urn_distribution(scheme)
    batch = urn.run_urn_trials(scheme, 40_000, 7)
    assert stats.tv_distance(batch.sigma_pmf(), dp.sigma_pmf()) < 0.02


def test_mc_mean_z_matches_dp():
    scheme = urn.FiniteUrnScheme(a=2, b=4, S0=8, Z0=16)
    dp = urn.dp_urn_distribution(scheme)
    ns = np.arange(0, dp.n_steps + 1)
    batch = urn.run_urn_trials(scheme, 40_000, 11, check_ns=ns)
    for j, n in enumerate(ns):
        zs = batch.Z_at[:, j]
        mean, std = zs.mean(), zs.std(ddof=1)
        stderr = std / math.sqrt(len(zs))
        assert abs(mean - float(dp.mean_Z(int(n)))) <= max(4 * stderr, 1e-9), f"n={n}"


def test_trial_chunk_invariance():
    scheme = urn.FiniteUrnScheme(a=2, b=3, S0=9, Z0=21)
    whole = urn.run_urn_trials(scheme, 50, 123)
    first = urn.run_urn_trials(scheme, 20, 123)
    second = urn.run_urn_trials(scheme, 30, 123, trial_offset=20)
    assert np.array_equal(whole.sigma, np.concatenate([first.sigma, second.sigma]))
    assert np.array_equal(
        whole.Z_final, np.concatenate([first.Z_final, second.Z_final])
    )


def test_trajectory_invariants_and_monitors():
    scheme = urn.FiniteUrnScheme(a=2, b=3, S0=30, Z0=60)
    traj = urn.run_urn(scheme, rng=3)
    M = scheme.M
    for n, S, Z in zip(traj.ns, traj.S, traj.Z):
        assert S + Z == M - 2 * n
        assert (scheme.Z0 - Z) % scheme.b == 0
        assert S >= 0 and Z >= 0
    # monitors recomputable from the full-stride trajectory
    sup_k = 0.0
    sup_l = 0.0
    for n, S, Z in zip(traj.ns, traj.S, traj.Z):
        if n == 0:
            continue
        rem = max(0.0, 1 - 2 * n / M)
        curve = scheme.Z0 * rem ** (scheme.b / scheme.a)
        if curve > 0:
            sup_k = max(sup_k, abs(Z / curve - 1))
        denom = (M - 2 * n) - curve
        if denom > 0:
            sup_l = max(sup_l, abs(S / denom - 1))
    assert traj.sup_K_dev == pytest.approx(sup_k)
    assert traj.sup_L_dev == pytest.approx(sup_l)


def test_trajectory_k_l_series_definitions():
    scheme = urn.FiniteUrnScheme(a=2, b=3, S0=12, Z0=24)
    traj = urn.run_urn(scheme, rng=9)
    K = traj.K
    L = traj.L
    assert len(K) == len(traj.ns) == len(L)
    for i, (n, S, Z) in enumerate(zip(traj.ns, traj.S, traj.Z)):
        rem = 1 - 2 * n / scheme.M
        curve = scheme.Z0 * rem ** 1.5
        if curve > 0:
            assert K[i] == pytest.approx(Z / curve)
        denom = (scheme.M - 2 * n) - curve
        if denom > 0:
            assert L[i] == pytest.approx(S / denom)


def test_sigma_survival_monotone():
    scheme = urn.FiniteUrnScheme(a=2, b=3, S0=100, Z0=300)
    batch = urn.run_urn_trials(scheme, 5000, 31)
    ns = [0, 10, 50, 100, 150, 200]
    surv = [urn.sigma_survival(batch.sigma, n) for n in ns]
    assert surv[0] == 1.0
    assert all(a >= b for a, b in zip(surv, surv[1:]))


def test_sigma_sentinel_counts_as_survivor():
    sigmas = np.array([urn.SIGMA_NEVER, 5, 10])
    assert urn.sigma_survival(sigmas, 7) == pytest.approx(2 / 3)
    assert urn.sigma_survival(sigmas, 11) == pytest.approx(1 / 3)


@given(
    st.integers(1, 3),
    st.integers(2, 6),
    st.integers(0, 20),
    st.integers(0, 30),
    st.integers(0, 2**32),
)
@settings(max_examples=60, deadline=None)
def test_trajectory_invariants_random_schemes(a, b_extra, S0, Z0, seed):
    b = a + b_extra - 1
    if b <= a:
        b = a + 1
    if S0 + Z0 == 0:
        S0 = 1
    scheme = urn.FiniteUrnScheme(a=a, b=b, S0=S0, Z0=Z0)
    traj = urn.run_urn(scheme, rng=seed)
    for n, S, Z in zip(traj.ns, traj.S, traj.Z):
        assert S + Z == scheme.M - a * n
        assert (scheme.Z0 - Z) % b == 0
        assert S >= 0 and Z >= 0
    if traj.sigma != urn.SIGMA_NEVER:
        assert traj.Z[-1] == 0 or traj.sigma <= traj.n_final


# --------------------------------------------------------------- growth urn


def test_diag_urn_polya_uniform_law():
    # alpha1=alpha2=a1=a2=1, S0=Z0=1: S_n - 1 is uniform on {0..n} exactly
    scheme = urn.DiagUrnScheme(alpha1=1.0, alpha2=1.0, a1=1.0, a2=1.0, S0=1.0, Z0=1.0)
    n, trials = 30, 40_000
    S_fin, Z_fin = urn.diag_urn_trials(scheme, n, trials, 17)
    assert np.all(S_fin + Z_fin == 2 + n)
    counts = np.bincount((S_fin - 1).astype(int), minlength=n + 1)
    pmf = {i: c / trials for i, c in enumerate(counts)}
    uniform = {i: 1 / (n + 1) for i in range(n + 1)}
    assert stats.tv_distance(pmf, uniform) < 0.03


def test_diag_urn_weighted_first_step():
    # First draw: P(S) = alpha1*S0 / (alpha1*S0 + alpha2*Z0)
    scheme = urn.DiagUrnScheme(alpha1=3.0, alpha2=1.0, a1=2.0, a2=5.0, S0=1.0, Z0=1.0)
    S_fin, _ = urn.diag_urn_trials(scheme, 1, 30_000, 23)
    p_s = np.mean(S_fin > 1.0)
    assert p_s == pytest.approx(0.75, abs=0.01)


def test_janson_sublinear_check_runs():
    res = urn.janson_sublinear_check(1.0, 3.0, 1.0, 3.0, 2000, 3000, 41)
    assert res.ks_d < 0.08
    assert len(res.scaled_samples) == 3000
    assert len(res.reference_samples) == 3000
    assert set(res.scaled_quantiles) == set(res.reference_quantiles)
    with pytest.raises(ValueError):
        urn.janson_sublinear_check(3.0, 1.0, 1.0, 3.0, 100, 100, 1)  # needs alpha<delta
