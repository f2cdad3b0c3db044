"""Event-driven two-type first-passage percolation on an explicit graph.

Blue spreads at rate beta, red at rate 1.  Per uncolored vertex the engine
keeps the multiplicity of blue and red edge-ends pointing at it; the next
capture is sampled in two stages (color by aggregate rate, vertex by
multiplicity through a Fenwick tree), which is exact by memorylessness of
the exponential clocks.  Captured vertices never recolor.

An optional blue head start runs the blue-only process first, either until a
target count of blue vertices (no clocks needed) or for a fixed duration
(event times as sums of exponentials).  Capture times are recorded on
request; seeds sit at time 0.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from ._rng import coerce_seed, derive_seed, derive_seed_u64, xs_init, xs_next_double, xs_randbelow
from .graph_providers import make_torus, sample_configuration_multigraph, spreading_csr

__all__ = [
    "UNCOLORED",
    "BLUE",
    "RED",
    "HeadStart",
    "RaceConfig",
    "ColoringResult",
    "simulate_race",
    "simulate_torus_experiment",
    "race_on_configuration_model",
    "config_race_trials",
]

UNCOLORED = 0
BLUE = 1
RED = 2
_COLOR_NAMES = {UNCOLORED: "uncolored", BLUE: "blue", RED: "red"}

_PHASE_NONE = 0
_PHASE_COUNT = 1
_PHASE_DURATION = 2


@dataclass(frozen=True)
class HeadStart:
    """Blue-only opening phase: none, until a blue vertex count, or a duration."""

    kind: str = "none"
    value: float = 0.0

    @classmethod
    def none(cls) -> "HeadStart":
        return cls("none", 0.0)

    @classmethod
    def until_blue_count(cls, target: int) -> "HeadStart":
        if target < 1:
            raise ValueError("target must be >= 1")
        return cls("until_blue_count", float(target))

    @classmethod
    def duration(cls, t: float) -> "HeadStart":
        if t < 0:
            raise ValueError("duration must be >= 0")
        return cls("duration", float(t))

    def __post_init__(self):
        if self.kind not in ("none", "until_blue_count", "duration"):
            raise ValueError(f"unknown head start kind {self.kind!r}")


@dataclass(frozen=True)
class RaceConfig:
    beta: float
    blue_seeds: tuple
    red_seeds: tuple = ()
    head_start: HeadStart = HeadStart()
    record_times: bool = False

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "blue_seeds", tuple(int(v) for v in self.blue_seeds))
        object.__setattr__(self, "red_seeds", tuple(int(v) for v in self.red_seeds))
        if len(self.blue_seeds) == 0:
            raise ValueError("need at least one blue seed")
        if len(self.red_seeds) == 0 and self.head_start.kind == "none":
            raise ValueError("red seeds may be empty only with a head start")
        if set(self.blue_seeds) & set(self.red_seeds):
            raise ValueError("seed sets must be disjoint")
        if len(set(self.blue_seeds)) != len(self.blue_seeds) or len(
            set(self.red_seeds)
        ) != len(self.red_seeds):
            raise ValueError("duplicate seed vertex")


@dataclass
class ColoringResult:
    colors: np.ndarray  # int8 per vertex: 0 uncolored, 1 blue, 2 red
    capture_times: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return len(self.colors)

    @property
    def B_bar(self) -> int:
        return int(np.sum(self.colors == BLUE))

    @property
    def R_bar(self) -> int:
        return int(np.sum(self.colors == RED))

    @property
    def U(self) -> int:
        return int(np.sum(self.colors == UNCOLORED))

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("vertex,color,capture_time\n")
            for v in range(self.N):
                t = ""
                if self.capture_times is not None and not math.isnan(self.capture_times[v]):
                    t = format(self.capture_times[v], ".17g")
                fh.write(f"{v},{_COLOR_NAMES[int(self.colors[v])]},{t}\n")


@njit(cache=True, inline="always")
def _fenwick_add(tree, i, delta):
    i += 1
    n = tree.shape[0]
    while i < n:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True, inline="always")
def _fenwick_select(tree, log2n, target):
    """Smallest 0-based index whose cumulative weight exceeds target."""
    pos = 0
    n = tree.shape[0]
    step = 1 << log2n
    while step > 0:
        nxt = pos + step
        if nxt < n and tree[nxt] <= target:
            pos = nxt
            target -= tree[nxt]
        step >>= 1
    return pos


@njit(cache=True)
def _race_kernel(
    indptr,
    indices,
    color,
    times,
    record_times,
    beta,
    seed,
    phase_mode,
    phase_param,
    stop_after_phase,
    t_start,
):
    """Run the race on a pre-colored graph, mutating color/times in place.

    phase_mode: 0 none, 1 blue-only until blue count >= phase_param,
    2 blue-only until elapsed time phase_param.  Returns the final clock.
    """
    N = color.shape[0]
    blue_w = np.zeros(N, np.int64)
    red_w = np.zeros(N, np.int64)
    tree_b = np.zeros(N + 1, np.int64)
    tree_r = np.zeros(N + 1, np.int64)
    log2n = 0
    while (1 << (log2n + 1)) <= N:
        log2n += 1
    total_b = np.int64(0)
    total_r = np.int64(0)
    n_blue = np.int64(0)
    for v in range(N):
        if color[v] == 1:
            n_blue += 1
    for v in range(N):
        cv = color[v]
        if cv != 0:
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if color[w] == 0:
                    if cv == 1:
                        blue_w[w] += 1
                        _fenwick_add(tree_b, w, 1)
                        total_b += 1
                    else:
                        red_w[w] += 1
                        _fenwick_add(tree_r, w, 1)
                        total_r += 1
    t = t_start
    in_phase = phase_mode != _PHASE_NONE
    s0, s1, s2, s3 = xs_init(seed)
    while True:
        if in_phase:
            if phase_mode == _PHASE_COUNT and n_blue >= phase_param:
                in_phase = False
                if stop_after_phase:
                    break
                continue
            if total_b == 0:
                in_phase = False
                if stop_after_phase:
                    break
                continue
            if phase_mode == _PHASE_DURATION or record_times:
                s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
                dt = -np.log(1.0 - u) / (beta * total_b)
                if phase_mode == _PHASE_DURATION and t + dt > phase_param:
                    t = phase_param
                    in_phase = False
                    if stop_after_phase:
                        break
                    continue
                t += dt
            capture_color = np.int8(1)
            s0, s1, s2, s3, pick = xs_randbelow(s0, s1, s2, s3, total_b)
            v = _fenwick_select(tree_b, log2n, pick)
        else:
            rate_b = beta * total_b
            rate_r = float(total_r)
            total_rate = rate_b + rate_r
            if total_rate == 0.0:
                break
            if record_times:
                s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
                t += -np.log(1.0 - u) / total_rate
            s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
            if u * total_rate < rate_b:
                capture_color = np.int8(1)
                s0, s1, s2, s3, pick = xs_randbelow(s0, s1, s2, s3, total_b)
                v = _fenwick_select(tree_b, log2n, pick)
            else:
                capture_color = np.int8(2)
                s0, s1, s2, s3, pick = xs_randbelow(s0, s1, s2, s3, total_r)
                v = _fenwick_select(tree_r, log2n, pick)
        # capture v
        color[v] = capture_color
        if capture_color == 1:
            n_blue += 1
        if record_times:
            times[v] = t
        if blue_w[v] > 0:
            _fenwick_add(tree_b, v, -blue_w[v])
            total_b -= blue_w[v]
            blue_w[v] = 0
        if red_w[v] > 0:
            _fenwick_add(tree_r, v, -red_w[v])
            total_r -= red_w[v]
            red_w[v] = 0
        for j in range(indptr[v], indptr[v + 1]):
            w = indices[j]
            if color[w] == 0:
                if capture_color == 1:
                    blue_w[w] += 1
                    _fenwick_add(tree_b, w, 1)
                    total_b += 1
                else:
                    red_w[w] += 1
                    _fenwick_add(tree_r, w, 1)
                    total_r += 1
    return t


def _run_phases(indptr, indices, color, config: RaceConfig, seed: int):
    N = len(color)
    record = config.record_times
    times = np.full(N, np.nan) if record else np.empty(1)
    if record:
        times[color != UNCOLORED] = 0.0
    hs = config.head_start
    mode = {"none": _PHASE_NONE, "until_blue_count": _PHASE_COUNT, "duration": _PHASE_DURATION}[
        hs.kind
    ]
    _race_kernel(
        indptr,
        indices,
        color,
        times,
        record,
        float(config.beta),
        np.uint64(seed),
        np.int64(mode),
        float(hs.value),
        False,
        0.0,
    )
    return ColoringResult(colors=color, capture_times=times if record else None)


def simulate_race(graph, config: RaceConfig, rng=None) -> ColoringResult:
    """Exact simulation of the capture Markov process on an explicit graph."""
    indptr, indices = spreading_csr(graph)
    N = len(indptr) - 1
    color = np.zeros(N, dtype=np.int8)
    for v in config.blue_seeds:
        if not (0 <= v < N):
            raise ValueError(f"blue seed {v} out of range")
        color[v] = BLUE
    for v in config.red_seeds:
        if not (0 <= v < N):
            raise ValueError(f"red seed {v} out of range")
        color[v] = RED
    return _run_phases(indptr, indices, color, config, coerce_seed(rng))


def simulate_headstart_race(graph, beta: float, target: int, rng=None) -> ColoringResult:
    """One uniform blue seed grows alone to `target` vertices; then one
    uniform uncolored vertex turns red and the race runs to completion."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    master = coerce_seed(rng)
    indptr, indices = spreading_csr(graph)
    N = len(indptr) - 1
    if not (1 <= target <= N):
        raise ValueError(f"head-start target {target} must lie in [1, N={N}]")
    pick_rng = np.random.default_rng(derive_seed(master, 0))
    blue_seed = int(pick_rng.integers(0, N))
    color = np.zeros(N, dtype=np.int8)
    color[blue_seed] = BLUE
    times = np.full(N, np.nan)
    times[blue_seed] = 0.0
    t_phase = _race_kernel(
        indptr,
        indices,
        color,
        times,
        True,
        float(beta),
        np.uint64(derive_seed(master, 1)),
        np.int64(_PHASE_COUNT),
        float(target),
        True,
        0.0,
    )
    uncolored = np.flatnonzero(color == UNCOLORED)
    if len(uncolored) == 0:
        return ColoringResult(colors=color, capture_times=times)
    red_seed = int(uncolored[pick_rng.integers(0, len(uncolored))])
    color[red_seed] = RED
    times[red_seed] = t_phase
    _race_kernel(
        indptr,
        indices,
        color,
        times,
        True,
        float(beta),
        np.uint64(derive_seed(master, 2)),
        np.int64(_PHASE_NONE),
        0.0,
        False,
        t_phase,
    )
    return ColoringResult(colors=color, capture_times=times)


def simulate_torus_experiment(
    n: int, dim: int, epsilon: float, beta: float, rng=None
) -> ColoringResult:
    """Blue grows alone from one uniform vertex to ceil(epsilon*N) vertices;
    then one uniform uncolored vertex turns red and the race runs out."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    torus = make_torus(n, dim)
    target = int(math.ceil(epsilon * torus.N))
    return simulate_headstart_race(torus, beta, target, rng=rng)


def race_on_configuration_model(
    N: int,
    d: int,
    B0: int,
    R0: int,
    beta: float,
    mode: str = "multigraph",
    rng=None,
) -> ColoringResult:
    """Sample a configuration-model graph, place disjoint uniform seeds, race."""
    if B0 < 1 or R0 < 1 or B0 + R0 > N:
        raise ValueError("need B0, R0 >= 1 and B0 + R0 <= N")
    master = coerce_seed(rng)
    sample_rng = np.random.default_rng(derive_seed(master, 0))
    graph = sample_configuration_multigraph(N, d, sample_rng, mode=mode)
    picks = sample_rng.permutation(N)[: B0 + R0]
    config = RaceConfig(beta=beta, blue_seeds=picks[:B0], red_seeds=picks[B0:])
    return simulate_race(graph, config, derive_seed(master, 1))


@njit(cache=True, nogil=True)
def _config_race_trials_kernel(N, d, beta, B0, R0, n_trials, trial_offset, base_seed):
    """Sample multigraph + uniform disjoint seeds + race, fully in-kernel.

    Linear-scan capture sampling: meant for small N (the oracle regime).
    """
    M = N * d
    B_out = np.empty(n_trials, np.int64)
    R_out = np.empty(n_trials, np.int64)
    U_out = np.empty(n_trials, np.int64)
    he = np.empty(M, np.int64)
    deg = np.empty(N, np.int64)
    indptr = np.empty(N + 1, np.int64)
    fill = np.empty(N, np.int64)
    indices = np.empty(M, np.int64)
    vperm = np.empty(N, np.int64)
    color = np.empty(N, np.int8)
    blue_w = np.empty(N, np.int64)
    red_w = np.empty(N, np.int64)
    for trial in range(n_trials):
        seed = derive_seed_u64(base_seed, np.uint64(trial_offset + trial))
        s0, s1, s2, s3 = xs_init(seed)
        # uniform perfect matching on half-edge labels
        for i in range(M):
            he[i] = i
        for i in range(M - 1, 0, -1):
            s0, s1, s2, s3, j = xs_randbelow(s0, s1, s2, s3, i + 1)
            tmp = he[i]
            he[i] = he[j]
            he[j] = tmp
        # spreading adjacency (loops dropped, parallels repeated)
        for v in range(N):
            deg[v] = 0
        for k in range(M // 2):
            u_v = he[2 * k] // d
            v_v = he[2 * k + 1] // d
            if u_v != v_v:
                deg[u_v] += 1
                deg[v_v] += 1
        indptr[0] = 0
        for v in range(N):
            indptr[v + 1] = indptr[v] + deg[v]
            fill[v] = indptr[v]
        for k in range(M // 2):
            u_v = he[2 * k] // d
            v_v = he[2 * k + 1] // d
            if u_v != v_v:
                indices[fill[u_v]] = v_v
                fill[u_v] += 1
                indices[fill[v_v]] = u_v
                fill[v_v] += 1
        # disjoint uniform seed sets
        for v in range(N):
            vperm[v] = v
        for i in range(B0 + R0):
            s0, s1, s2, s3, j = xs_randbelow(s0, s1, s2, s3, N - i)
            tmp = vperm[i]
            vperm[i] = vperm[i + j]
            vperm[i + j] = tmp
        for v in range(N):
            color[v] = 0
            blue_w[v] = 0
            red_w[v] = 0
        for i in range(B0):
            color[vperm[i]] = 1
        for i in range(B0, B0 + R0):
            color[vperm[i]] = 2
        total_b = np.int64(0)
        total_r = np.int64(0)
        for v in range(N):
            cv = color[v]
            if cv != 0:
                for j in range(indptr[v], indptr[v + 1]):
                    w = indices[j]
                    if color[w] == 0:
                        if cv == 1:
                            blue_w[w] += 1
                            total_b += 1
                        else:
                            red_w[w] += 1
                            total_r += 1
        # race, linear-scan selection
        while True:
            rate_b = beta * total_b
            total_rate = rate_b + total_r
            if total_rate == 0.0:
                break
            s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
            if u * total_rate < rate_b:
                cap = np.int8(1)
                s0, s1, s2, s3, pick = xs_randbelow(s0, s1, s2, s3, total_b)
                v = -1
                acc = np.int64(0)
                for w in range(N):
                    acc += blue_w[w]
                    if pick < acc:
                        v = w
                        break
            else:
                cap = np.int8(2)
                s0, s1, s2, s3, pick = xs_randbelow(s0, s1, s2, s3, total_r)
                v = -1
                acc = np.int64(0)
                for w in range(N):
                    acc += red_w[w]
                    if pick < acc:
                        v = w
                        break
            color[v] = cap
            total_b -= blue_w[v]
            total_r -= red_w[v]
            blue_w[v] = 0
            red_w[v] = 0
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if color[w] == 0:
                    if cap == 1:
                        blue_w[w] += 1
                        total_b += 1
                    else:
                        red_w[w] += 1
                        total_r += 1
        n_b = np.int64(0)
        n_r = np.int64(0)
        for v in range(N):
            if color[v] == 1:
                n_b += 1
            elif color[v] == 2:
                n_r += 1
        B_out[trial] = n_b
        R_out[trial] = n_r
        U_out[trial] = N - n_b - n_r
    return B_out, R_out, U_out


def config_race_trials(
    N: int,
    d: int,
    B0: int,
    R0: int,
    beta: float,
    trials: int,
    rng=None,
    trial_offset: int = 0,
):
    """Batch of race_on_configuration_model outcomes (multigraph mode), counts only.

    Fully in-kernel per trial with the standard (seed, trial_offset + i)
    stream derivation; intended for small-N oracle comparisons.
    """
    if B0 < 1 or R0 < 1 or B0 + R0 > N:
        raise ValueError("need B0, R0 >= 1 and B0 + R0 <= N")
    if d < 3 or (N * d) % 2 != 0:
        raise ValueError("need d >= 3 and dN even")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = coerce_seed(rng)
    return _config_race_trials_kernel(
        np.int64(N),
        np.int64(d),
        float(beta),
        np.int64(B0),
        np.int64(R0),
        np.int64(trials),
        np.int64(trial_offset),
        np.uint64(seed),
    )
