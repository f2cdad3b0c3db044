"""Two-color half-edge exploration chain on the configuration model.

The chain tracks only counts: X blue half-edges, Y red half-edges, Z
uncolored half-edges, with X + Y + Z = M - 2n after n pairing steps
(M = d*N half-edges initially).  Each step draws a colored half-edge e_n
(blue pool with probability beta*X/(beta*X + Y)) and pairs it with a uniform
survivor g_n; pairing with an uncolored half-edge colors a new vertex (d-2
net new colored half-edges), pairing with a colored one just burns the pair.
The process ends at X + Y = 0; leftover uncolored half-edges come in full
d-tuples, one per never-reached vertex.

Counts suffice because the uniform matching is exchangeable over vertices;
no identities are ever tracked.  No conditioning on simplicity is applied —
the explicit-graph engine provides the simple-graph cross-check.

The single-color warm-up runs the same chain with Y = 0 until a target
number of blue vertices is reached, then recolors uncolored vertices red;
M stays d*N and the step index keeps counting, so the invariant is exact
across the injection.
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numba import njit

from ._rng import coerce_seed, derive_seed_u64, xs_init, xs_next_double, xs_randbelow

__all__ = [
    "ChainParams",
    "ChainState",
    "FinalCounts",
    "KMonitorConfig",
    "KMonitor",
    "StepOutcome",
    "WarmupDied",
    "KUndefinedError",
    "init_uniform",
    "step",
    "run_to_absorption",
    "warmup_blue",
    "add_red_seeds",
    "k_value",
    "run_race_trials",
    "run_warmup_race_trials",
]

_NO_LIMIT = np.int64(2**62)


class KUndefinedError(ValueError):
    """K_n is undefined (no red half-edges alive)."""


@dataclass(frozen=True)
class ChainParams:
    N: int
    d: int
    beta: float
    seed: Optional[int] = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.d < 3:
            raise ValueError("d must be >= 3")
        if (self.d * self.N) % 2 != 0:
            raise ValueError(f"d*N = {self.d * self.N} is odd; no d-regular graph exists")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def M(self) -> int:
        return self.d * self.N


@dataclass(frozen=True)
class ChainState:
    """Counts after n steps.  Carries d and beta so stepping needs no extra context."""

    X: int
    Y: int
    Z: int
    n: int
    M: int
    B: int
    R: int
    d: int
    beta: float

    def __post_init__(self):
        if min(self.X, self.Y, self.Z, self.B, self.R) < 0:
            raise ValueError("negative count")
        if self.X + self.Y + self.Z != self.M - 2 * self.n:
            raise ValueError(
                f"count invariant violated: X+Y+Z = {self.X + self.Y + self.Z}, "
                f"M-2n = {self.M - 2 * self.n}"
            )

    @property
    def alive(self) -> bool:
        return self.X + self.Y > 0


@dataclass(frozen=True)
class FinalCounts:
    B_bar: int
    R_bar: int
    U: int
    steps: int

    def __post_init__(self):
        if self.B_bar < 0 or self.R_bar < 0 or self.U < 0:
            raise ValueError("negative final count")


class StepOutcome(enum.Enum):
    FORWARD_BLUE = "forward_blue"
    FORWARD_RED = "forward_red"
    BACKWARD_BB = "backward_bb"
    BACKWARD_BR = "backward_br"
    BACKWARD_RR = "backward_rr"


@dataclass(frozen=True)
class WarmupDied:
    """Single-color warm-up absorbed (X hit 0) before reaching its target."""

    B_reached: int
    steps: int


@dataclass(frozen=True)
class KMonitorConfig:
    sample_stride: Optional[int] = None  # default: max(1, M // 2**14)
    n_limit: Optional[int] = None  # window for the running sup of |K_n/K0 - 1|


@dataclass
class KMonitor:
    series_n: np.ndarray
    series_K: np.ndarray
    K0: float
    sample_stride: int
    n_limit: Optional[int]
    sup_dev: float  # max over steps n <= n_limit (while X,Y > 0) of |K_n/K0 - 1|

    @property
    def series(self) -> list:
        return list(zip(self.series_n.tolist(), self.series_K.tolist()))


def init_uniform(params: ChainParams, B0: int, R0: int) -> ChainState:
    """State for disjoint uniform seed sets of B0 blue and R0 red vertices."""
    if B0 < 1 or R0 < 1:
        raise ValueError("need B0 >= 1 and R0 >= 1")
    if B0 + R0 > params.N:
        raise ValueError(f"seed sets exceed vertex count: {B0} + {R0} > {params.N}")
    d = params.d
    return ChainState(
        X=d * B0,
        Y=d * R0,
        Z=d * (params.N - B0 - R0),
        n=0,
        M=params.M,
        B=B0,
        R=R0,
        d=d,
        beta=params.beta,
    )


def step(state: ChainState, rng: np.random.Generator) -> tuple[ChainState, StepOutcome]:
    """One pairing step; returns the new state and which of the five branches fired."""
    X, Y, Z = state.X, state.Y, state.Z
    if X + Y < 1:
        raise ValueError("chain already absorbed")
    remaining = state.M - 2 * state.n
    if remaining < 2:
        raise ValueError("fewer than two half-edges left")
    w_blue = state.beta * X
    blue_pool = rng.random() * (w_blue + Y) < w_blue
    g = int(rng.integers(0, remaining - 1))
    d = state.d
    if blue_pool:
        if g < X - 1:
            X -= 2
            outcome = StepOutcome.BACKWARD_BB
        elif g < X - 1 + Y:
            X -= 1
            Y -= 1
            outcome = StepOutcome.BACKWARD_BR
        else:
            X += d - 2
            Z -= d
            outcome = StepOutcome.FORWARD_BLUE
    else:
        if g < X:
            X -= 1
            Y -= 1
            outcome = StepOutcome.BACKWARD_BR
        elif g < X + Y - 1:
            Y -= 2
            outcome = StepOutcome.BACKWARD_RR
        else:
            Y += d - 2
            Z -= d
            outcome = StepOutcome.FORWARD_RED
    return (
        ChainState(
            X=X,
            Y=Y,
            Z=Z,
            n=state.n + 1,
            M=state.M,
            B=state.B + (outcome is StepOutcome.FORWARD_BLUE),
            R=state.R + (outcome is StepOutcome.FORWARD_RED),
            d=d,
            beta=state.beta,
        ),
        outcome,
    )


def k_value(state: ChainState, beta: Optional[float] = None) -> float:
    """X / (Y^beta * (1 - 2n/M)^{(1-beta)/2}), in log space.

    Raises KUndefinedError when Y = 0.
    """
    b = state.beta if beta is None else beta
    if state.Y <= 0:
        raise KUndefinedError("K is undefined when Y = 0")
    if 2 * state.n >= state.M:
        raise ValueError("need n < M/2")
    if state.X == 0:
        return 0.0
    log_k = (
        math.log(state.X)
        - b * math.log(state.Y)
        - 0.5 * (1.0 - b) * math.log(1.0 - 2.0 * state.n / state.M)
    )
    return math.exp(log_k)


@njit(cache=True, inline="always")
def _log_k(X, Y, n, M, beta):
    return (
        np.log(float(X))
        - beta * np.log(float(Y))
        - 0.5 * (1.0 - beta) * np.log(1.0 - 2.0 * n / M)
    )


@njit(cache=True, nogil=True)
def _race_single_kernel(d, beta, X, Y, Z, n, M, B, R, seed, stride, n_limit, collect):
    cap = 2
    if collect:
        cap = (M - 2 * n) // 2 // stride + 3
    ns_out = np.empty(cap, np.int64)
    ks_out = np.empty(cap, np.float64)
    count = 0
    k0_log = np.nan
    sup_dev = 0.0
    have_k = X > 0 and Y > 0
    if have_k:
        k0_log = _log_k(X, Y, n, M, beta)
        if collect:
            ns_out[count] = n
            ks_out[count] = np.exp(k0_log)
            count += 1
    s0, s1, s2, s3 = xs_init(seed)
    while X + Y > 0:
        w_blue = beta * X
        s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
        blue_pool = u * (w_blue + Y) < w_blue
        s0, s1, s2, s3, g = xs_randbelow(s0, s1, s2, s3, M - 2 * n - 1)
        if blue_pool:
            if g < X - 1:
                X -= 2
            elif g < X - 1 + Y:
                X -= 1
                Y -= 1
            else:
                X += d - 2
                Z -= d
                B += 1
        else:
            if g < X:
                X -= 1
                Y -= 1
            elif g < X + Y - 1:
                Y -= 2
            else:
                Y += d - 2
                Z -= d
                R += 1
        n += 1
        if X > 0 and Y > 0:
            if n <= n_limit:
                dev = abs(np.exp(_log_k(X, Y, n, M, beta) - k0_log) - 1.0)
                if dev > sup_dev:
                    sup_dev = dev
            if collect and n % stride == 0:
                ns_out[count] = n
                ks_out[count] = np.exp(_log_k(X, Y, n, M, beta))
                count += 1
    return B, R, Z // d, n, np.exp(k0_log), sup_dev, ns_out[:count], ks_out[:count]


@njit(cache=True, nogil=True)
def _race_trials_kernel(
    d, beta, X0, Y0, Z0, B0, R0, n_trials, trial_offset, base_seed, n_limit, track_k
):
    B_bar = np.empty(n_trials, np.int64)
    R_bar = np.empty(n_trials, np.int64)
    U = np.empty(n_trials, np.int64)
    steps = np.empty(n_trials, np.int64)
    sup_dev = np.zeros(n_trials, np.float64)
    M = X0 + Y0 + Z0
    for trial in range(n_trials):
        seed = derive_seed_u64(base_seed, np.uint64(trial_offset + trial))
        s0, s1, s2, s3 = xs_init(seed)
        X = X0
        Y = Y0
        Z = Z0
        B = B0
        R = R0
        n = np.int64(0)
        k0_log = 0.0
        sup = 0.0
        if track_k and X > 0 and Y > 0:
            k0_log = _log_k(X, Y, n, M, beta)
        while X + Y > 0:
            w_blue = beta * X
            s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
            blue_pool = u * (w_blue + Y) < w_blue
            s0, s1, s2, s3, g = xs_randbelow(s0, s1, s2, s3, M - 2 * n - 1)
            if blue_pool:
                if g < X - 1:
                    X -= 2
                elif g < X - 1 + Y:
                    X -= 1
                    Y -= 1
                else:
                    X += d - 2
                    Z -= d
                    B += 1
            else:
                if g < X:
                    X -= 1
                    Y -= 1
                elif g < X + Y - 1:
                    Y -= 2
                else:
                    Y += d - 2
                    Z -= d
                    R += 1
            n += 1
            if track_k and n <= n_limit and X > 0 and Y > 0:
                dev = abs(np.exp(_log_k(X, Y, n, M, beta) - k0_log) - 1.0)
                if dev > sup:
                    sup = dev
        B_bar[trial] = B
        R_bar[trial] = R
        U[trial] = Z // d
        steps[trial] = n
        sup_dev[trial] = sup
    return B_bar, R_bar, U, steps, sup_dev


@njit(cache=True, nogil=True)
def _warmup_kernel(d, N, k, B0_target, seed):
    M = d * N
    X = np.int64(d * k)
    Z = np.int64(M - d * k)
    B = np.int64(k)
    n = np.int64(0)
    s0, s1, s2, s3 = xs_init(seed)
    while B < B0_target and X > 0:
        s0, s1, s2, s3, g = xs_randbelow(s0, s1, s2, s3, M - 2 * n - 1)
        if g < X - 1:
            X -= 2
        else:
            X += d - 2
            Z -= d
            B += 1
        n += 1
    died = X <= 0 and B < B0_target
    return died, X, Z, B, n


@njit(cache=True, nogil=True)
def _warmup_race_trials_kernel(
    d, beta, N, k, B0_target, R0, n_trials, trial_offset, base_seed, resample_cap
):
    """Warm-up + red injection + race per trial; died warm-ups are resampled.

    Each attempt uses the stream derived from (trial stream seed, attempt), so
    resampling stays deterministic under any chunking.
    """
    X_warm = np.empty(n_trials, np.int64)
    B_bar = np.empty(n_trials, np.int64)
    R_bar = np.empty(n_trials, np.int64)
    U = np.empty(n_trials, np.int64)
    steps = np.empty(n_trials, np.int64)
    attempts_out = np.empty(n_trials, np.int64)
    failed = np.zeros(n_trials, np.bool_)
    M = np.int64(d * N)
    for trial in range(n_trials):
        trial_seed = derive_seed_u64(base_seed, np.uint64(trial_offset + trial))
        died = True
        X = np.int64(0)
        Z = np.int64(0)
        B = np.int64(0)
        n = np.int64(0)
        attempt = 0
        s0 = s1 = s2 = s3 = np.uint64(0)
        while attempt < resample_cap:
            seed = derive_seed_u64(trial_seed, np.uint64(attempt))
            s0, s1, s2, s3 = xs_init(seed)
            X = np.int64(d * k)
            Z = np.int64(M - d * k)
            B = np.int64(k)
            n = np.int64(0)
            while B < B0_target and X > 0:
                s0, s1, s2, s3, g = xs_randbelow(s0, s1, s2, s3, M - 2 * n - 1)
                if g < X - 1:
                    X -= 2
                else:
                    X += d - 2
                    Z -= d
                    B += 1
                n += 1
            attempt += 1
            if B >= B0_target:
                died = False
                break
        attempts_out[trial] = attempt
        if died:
            failed[trial] = True
            X_warm[trial] = 0
            B_bar[trial] = B
            R_bar[trial] = 0
            U[trial] = Z // d
            steps[trial] = n
            continue
        X_warm[trial] = X
        # inject red seeds among uncolored vertices, then race (same stream)
        Y = np.int64(d * R0)
        Z -= d * R0
        R = np.int64(R0)
        while X + Y > 0:
            w_blue = beta * X
            s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
            blue_pool = u * (w_blue + Y) < w_blue
            s0, s1, s2, s3, g = xs_randbelow(s0, s1, s2, s3, M - 2 * n - 1)
            if blue_pool:
                if g < X - 1:
                    X -= 2
                elif g < X - 1 + Y:
                    X -= 1
                    Y -= 1
                else:
                    X += d - 2
                    Z -= d
                    B += 1
            else:
                if g < X:
                    X -= 1
                    Y -= 1
                elif g < X + Y - 1:
                    Y -= 2
                else:
                    Y += d - 2
                    Z -= d
                    R += 1
            n += 1
        B_bar[trial] = B
        R_bar[trial] = R
        U[trial] = Z // d
        steps[trial] = n
    return X_warm, B_bar, R_bar, U, steps, attempts_out, failed


def run_to_absorption(
    state: ChainState,
    rng=None,
    monitor: Optional[KMonitorConfig] = None,
) -> tuple[FinalCounts, Optional[KMonitor]]:
    """Run until X + Y = 0.  The input state is not mutated.

    ``FinalCounts.steps`` is the final chain step index n (for states started
    at n = 0 this equals the number of steps this call performed).  With a
    monitor, K_n is sampled every stride steps while both colors are alive,
    K0 is the value at entry, and sup_dev tracks every step n <= n_limit.
    """
    seed = coerce_seed(rng)
    if monitor is None:
        stride = np.int64(1)
        n_limit = np.int64(-1)
        collect = False
    else:
        stride_val = monitor.sample_stride
        if stride_val is None:
            stride_val = max(1, state.M // (1 << 14))
        if stride_val < 1:
            raise ValueError("sample_stride must be >= 1")
        stride = np.int64(stride_val)
        n_limit = _NO_LIMIT if monitor.n_limit is None else np.int64(monitor.n_limit)
        collect = True
    B, R, U, n, k0, sup_dev, ns_out, ks_out = _race_single_kernel(
        np.int64(state.d),
        float(state.beta),
        np.int64(state.X),
        np.int64(state.Y),
        np.int64(state.Z),
        np.int64(state.n),
        np.int64(state.M),
        np.int64(state.B),
        np.int64(state.R),
        np.uint64(seed),
        stride,
        n_limit,
        collect,
    )
    final = FinalCounts(B_bar=int(B), R_bar=int(R), U=int(U), steps=int(n))
    if monitor is None:
        return final, None
    return final, KMonitor(
        series_n=ns_out,
        series_K=ks_out,
        K0=float(k0),
        sample_stride=int(stride),
        n_limit=monitor.n_limit,
        sup_dev=float(sup_dev),
    )


def add_red_seeds(state: ChainState, R0: int) -> ChainState:
    """Recolor R0 uniformly chosen uncolored vertices red (counts only)."""
    if R0 < 1:
        raise ValueError("R0 must be >= 1")
    uncolored_vertices = state.Z // state.d
    if R0 > uncolored_vertices:
        raise ValueError(f"only {uncolored_vertices} uncolored vertices left")
    return ChainState(
        X=state.X,
        Y=state.Y + state.d * R0,
        Z=state.Z - state.d * R0,
        n=state.n,
        M=state.M,
        B=state.B,
        R=state.R + R0,
        d=state.d,
        beta=state.beta,
    )


def warmup_blue(
    params: ChainParams,
    k: int,
    B0_target: int,
    rng=None,
    R0: Optional[int] = None,
) -> Union[ChainState, WarmupDied]:
    """Single-color chain from k seeds until B = B0_target vertices are blue.

    Returns WarmupDied if the blue half-edge pool empties first.  When R0 is
    given, red seeds are injected into the returned state (add_red_seeds).
    The step index keeps counting across the injection, so X+Y+Z = M-2n is
    exact for the downstream race.
    """
    if not (1 <= k < B0_target <= params.N):
        raise ValueError("need 1 <= k < B0_target <= N")
    seed = coerce_seed(rng)
    died, X, Z, B, n = _warmup_kernel(
        np.int64(params.d),
        np.int64(params.N),
        np.int64(k),
        np.int64(B0_target),
        np.uint64(seed),
    )
    if died:
        return WarmupDied(B_reached=int(B), steps=int(n))
    state = ChainState(
        X=int(X),
        Y=0,
        Z=int(Z),
        n=int(n),
        M=params.M,
        B=int(B),
        R=0,
        d=params.d,
        beta=params.beta,
    )
    if R0 is not None:
        state = add_red_seeds(state, R0)
    return state


def run_race_trials(
    params: ChainParams,
    B0: int,
    R0: int,
    trials: int,
    rng=None,
    n_limit: Optional[int] = None,
    trial_offset: int = 0,
):
    """Batch of independent races from uniform seeds.

    Returns (B_bar, R_bar, U, steps, sup_K_dev) arrays.  sup_K_dev[i] is the
    max of |K_n/K0 - 1| over steps n <= n_limit of trial i (zeros when
    n_limit is None).  Trial i uses the stream for (seed, trial_offset + i).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    state0 = init_uniform(params, B0, R0)
    seed = coerce_seed(rng)
    track = n_limit is not None
    return _race_trials_kernel(
        np.int64(params.d),
        float(params.beta),
        np.int64(state0.X),
        np.int64(state0.Y),
        np.int64(state0.Z),
        np.int64(B0),
        np.int64(R0),
        np.int64(trials),
        np.int64(trial_offset),
        np.uint64(seed),
        _NO_LIMIT if n_limit is None else np.int64(n_limit),
        track,
    )


def run_warmup_race_trials(
    params: ChainParams,
    k: int,
    B0_target: int,
    R0: int,
    trials: int,
    rng=None,
    resample_cap: int = 64,
    trial_offset: int = 0,
):
    """Batch of warm-up + injection + race trials, resampling died warm-ups.

    Returns (X_warm, B_bar, R_bar, U, steps, attempts, failed) arrays; failed
    marks trials whose warm-up died resample_cap times in a row.
    """
    if not (1 <= k < B0_target <= params.N):
        raise ValueError("need 1 <= k < B0_target <= N")
    if R0 < 1 or B0_target + R0 > params.N:
        raise ValueError("need 1 <= R0 and B0_target + R0 <= N")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = coerce_seed(rng)
    return _warmup_race_trials_kernel(
        np.int64(params.d),
        float(params.beta),
        np.int64(params.N),
        np.int64(k),
        np.int64(B0_target),
        np.int64(R0),
        np.int64(trials),
        np.int64(trial_offset),
        np.uint64(seed),
        np.int64(resample_cap),
    )
