"""Finite and growth Polya urns.

The finite urn has replacement matrix (-a, 0; b-a, -b) with 0 < a < b: an
S-draw removes a balls from S, a Z-draw moves b balls out of Z and adds b-a
to S, so S_n + Z_n = M - a*n while updates stay feasible.  With a=2, b=d,
S = (colored half-edges) - 1 and Z = (uncolored half-edges), this is exactly
the companion process of the two-infection half-edge chain.  The module also
provides an exact small-instance DP oracle, the weighted diagonal growth urn,
and the sublinear-growth limit check against Gamma-ratio references.

Absorption convention: if the sampled draw would drive a count negative
(S < a on an S-draw, 0 < Z < b on a Z-draw), the urn halts at that step with
the state frozen.  This matches the half-edge chain, which terminates when
the last colored half-edges pair off.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from numba import njit

from ._rng import coerce_seed, derive_seed, derive_seed_u64, xs_init, xs_next_double
from .stats import ks_2sample

__all__ = [
    "FiniteUrnScheme",
    "UrnState",
    "UrnTrajectory",
    "UrnTrialBatch",
    "UrnDP",
    "DiagUrnScheme",
    "JansonCheck",
    "urn_step",
    "run_urn",
    "run_urn_trials",
    "dp_urn_distribution",
    "diag_urn_run",
    "diag_urn_trials",
    "janson_sublinear_check",
    "sigma_survival",
]

SIGMA_NEVER = -1  # sentinel: Z never reached 0 before the urn halted


@dataclass(frozen=True)
class FiniteUrnScheme:
    a: int
    b: int
    S0: int
    Z0: int

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise ValueError("need 0 < a < b")
        if self.S0 < 0 or self.Z0 < 0:
            raise ValueError("counts must be nonnegative")
        if self.S0 + self.Z0 <= 0:
            raise ValueError("urn must start nonempty")

    @property
    def M(self) -> int:
        return self.S0 + self.Z0

    def n_marker_1(self, t: float) -> int:
        """floor(M(1 - t*Z0^{-a/b})/a), clamped to [0, M//a]."""
        raw = math.floor(self.M * (1.0 - t * self.Z0 ** (-self.a / self.b)) / self.a)
        return max(0, min(raw, self.M // self.a))

    def n_marker_2(self, t: float) -> int:
        """floor(M(1 - Z0^{-a/b}/t)/a), clamped to [0, M//a]."""
        raw = math.floor(self.M * (1.0 - self.Z0 ** (-self.a / self.b) / t) / self.a)
        return max(0, min(raw, self.M // self.a))


@dataclass(frozen=True)
class UrnState:
    S: int
    Z: int
    absorbed: bool = False


def urn_step(state: UrnState, scheme: FiniteUrnScheme, rng) -> UrnState:
    """One draw: S-draw (prob S/(S+Z)) removes a from S; Z-draw moves b out of Z.

    Infeasible updates absorb the urn with the state frozen.
    """
    if state.absorbed:
        raise ValueError("urn already absorbed")
    S, Z = state.S, state.Z
    total = S + Z
    if total <= 0:
        raise ValueError("urn is empty")
    if isinstance(rng, np.random.Generator):
        u = rng.random()
    else:
        u = float(rng)  # allow a pre-drawn uniform for exact-path tests
    if u * total < S:
        if S < scheme.a:
            return UrnState(S, Z, absorbed=True)
        return UrnState(S - scheme.a, Z)
    if Z < scheme.b:
        return UrnState(S, Z, absorbed=True)
    return UrnState(S + scheme.b - scheme.a, Z - scheme.b)


@njit(cache=True, nogil=True)
def _urn_traj_kernel(a, b, S0, Z0, stride, k_limit, seed):
    M = S0 + Z0
    cap = (M // a) // stride + 4
    ns = np.empty(cap, np.int64)
    Ss = np.empty(cap, np.int64)
    Zs = np.empty(cap, np.int64)
    idx = 0
    S = S0
    Z = Z0
    ns[idx] = 0
    Ss[idx] = S
    Zs[idx] = Z
    idx += 1
    sigma = np.int64(0) if Z0 == 0 else np.int64(-1)
    sup_k = 0.0
    sup_l = 0.0
    inv_m = 1.0 / M
    expo = b / a
    s0, s1, s2, s3 = xs_init(seed)
    n = np.int64(0)
    while S + Z > 0:
        s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
        if u * (S + Z) < S:
            if S < a:
                break
            S -= a
        else:
            if Z < b:
                break
            S += b - a
            Z -= b
            if Z == 0 and sigma < 0:
                sigma = n + 1
        n += 1
        rem = 1.0 - a * n * inv_m
        if rem < 0.0:
            rem = 0.0
        curve = Z0 * rem**expo
        if Z0 > 0 and (k_limit < 0 or n <= k_limit) and curve > 0.0:
            dev = abs(Z / curve - 1.0)
            if dev > sup_k:
                sup_k = dev
        denom_l = (M - a * n) - curve
        if denom_l > 0.0:
            dev_l = abs(S / denom_l - 1.0)
            if dev_l > sup_l:
                sup_l = dev_l
        if n % stride == 0:
            ns[idx] = n
            Ss[idx] = S
            Zs[idx] = Z
            idx += 1
    if ns[idx - 1] != n:
        ns[idx] = n
        Ss[idx] = S
        Zs[idx] = Z
        idx += 1
    return ns[:idx], Ss[:idx], Zs[:idx], sigma, n, sup_k, sup_l


@njit(cache=True, nogil=True)
def _urn_trials_kernel(a, b, S0, Z0, n_trials, trial_offset, base_seed, ns_check, k_limit):
    n_checks = ns_check.shape[0]
    S_at = np.zeros((n_trials, n_checks), np.int64)
    Z_at = np.zeros((n_trials, n_checks), np.int64)
    sigma = np.empty(n_trials, np.int64)
    n_final = np.empty(n_trials, np.int64)
    sup_k = np.zeros(n_trials, np.float64)
    sup_l = np.zeros(n_trials, np.float64)
    S_fin = np.empty(n_trials, np.int64)
    Z_fin = np.empty(n_trials, np.int64)
    M = S0 + Z0
    inv_m = 1.0 / M
    expo = b / a
    for trial in range(n_trials):
        seed = derive_seed_u64(base_seed, np.uint64(trial_offset + trial))
        s0, s1, s2, s3 = xs_init(seed)
        S = S0
        Z = Z0
        sig = np.int64(0) if Z0 == 0 else np.int64(-1)
        sk = 0.0
        sl = 0.0
        ptr = 0
        while ptr < n_checks and ns_check[ptr] == 0:
            S_at[trial, ptr] = S
            Z_at[trial, ptr] = Z
            ptr += 1
        n = np.int64(0)
        while S + Z > 0:
            s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
            if u * (S + Z) < S:
                if S < a:
                    break
                S -= a
            else:
                if Z < b:
                    break
                S += b - a
                Z -= b
                if Z == 0 and sig < 0:
                    sig = n + 1
            n += 1
            rem = 1.0 - a * n * inv_m
            if rem < 0.0:
                rem = 0.0
            curve = Z0 * rem**expo
            if Z0 > 0 and (k_limit < 0 or n <= k_limit) and curve > 0.0:
                dev = abs(Z / curve - 1.0)
                if dev > sk:
                    sk = dev
            denom_l = (M - a * n) - curve
            if denom_l > 0.0:
                dev_l = abs(S / denom_l - 1.0)
                if dev_l > sl:
                    sl = dev_l
            while ptr < n_checks and ns_check[ptr] == n:
                S_at[trial, ptr] = S
                Z_at[trial, ptr] = Z
                ptr += 1
        while ptr < n_checks:
            S_at[trial, ptr] = S
            Z_at[trial, ptr] = Z
            ptr += 1
        sigma[trial] = sig
        n_final[trial] = n
        sup_k[trial] = sk
        sup_l[trial] = sl
        S_fin[trial] = S
        Z_fin[trial] = Z
    return S_at, Z_at, sigma, n_final, sup_k, sup_l, S_fin, Z_fin


@dataclass
class UrnTrajectory:
    scheme: FiniteUrnScheme
    ns: np.ndarray
    S: np.ndarray
    Z: np.ndarray
    sigma: int
    n_final: int
    sup_K_dev: float
    sup_L_dev: float
    k_limit: Optional[int] = None

    @property
    def K(self) -> np.ndarray:
        """Z_n / (Z0 (1 - an/M)^{b/a}) at the stored samples; NaN where undefined."""
        sch = self.scheme
        rem = np.maximum(1.0 - sch.a * self.ns / sch.M, 0.0)
        curve = sch.Z0 * rem ** (sch.b / sch.a)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(curve > 0.0, self.Z / curve, np.nan)

    @property
    def L(self) -> np.ndarray:
        """S_n / ((M - an) - Z0 (1 - an/M)^{b/a}); NaN where the denominator vanishes."""
        sch = self.scheme
        rem = np.maximum(1.0 - sch.a * self.ns / sch.M, 0.0)
        denom = (sch.M - sch.a * self.ns) - sch.Z0 * rem ** (sch.b / sch.a)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(denom > 0.0, self.S / denom, np.nan)

    def n_marker_1(self, t: float) -> int:
        return self.scheme.n_marker_1(t)

    def n_marker_2(self, t: float) -> int:
        return self.scheme.n_marker_2(t)

    def write_csv(self, path) -> None:
        K = self.K
        L = self.L
        with open(path, "w") as fh:
            fh.write("n,S,Z,K,L\n")
            for i in range(len(self.ns)):
                fh.write(
                    f"{self.ns[i]},{self.S[i]},{self.Z[i]},"
                    f"{format(K[i], '.17g')},{format(L[i], '.17g')}\n"
                )


def run_urn(
    scheme: FiniteUrnScheme,
    stride: int = 1,
    rng=None,
    k_limit: Optional[int] = None,
) -> UrnTrajectory:
    """One trajectory with strided (n, S, Z) samples and exact running monitors.

    ``sup_K_dev`` is max |K_n - 1| over every step n <= k_limit (all steps if
    ``k_limit`` is None); ``sup_L_dev`` is max |L_n - 1| over every step where
    L is defined.  Both are computed in the kernel at full resolution, so the
    stride only affects the stored series.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    seed = coerce_seed(rng)
    kl = -1 if k_limit is None else int(k_limit)
    ns, Ss, Zs, sigma, n_final, sup_k, sup_l = _urn_traj_kernel(
        np.int64(scheme.a),
        np.int64(scheme.b),
        np.int64(scheme.S0),
        np.int64(scheme.Z0),
        np.int64(stride),
        np.int64(kl),
        np.uint64(seed),
    )
    return UrnTrajectory(
        scheme=scheme,
        ns=ns,
        S=Ss,
        Z=Zs,
        sigma=int(sigma),
        n_final=int(n_final),
        sup_K_dev=float(sup_k),
        sup_L_dev=float(sup_l),
        k_limit=k_limit,
    )


@dataclass
class UrnTrialBatch:
    scheme: FiniteUrnScheme
    check_ns: np.ndarray
    S_at: np.ndarray  # (trials, len(check_ns))
    Z_at: np.ndarray
    sigma: np.ndarray
    n_final: np.ndarray
    sup_K_dev: np.ndarray
    sup_L_dev: np.ndarray
    S_final: np.ndarray
    Z_final: np.ndarray

    def sigma_pmf(self) -> dict:
        values, counts = np.unique(self.sigma, return_counts=True)
        total = len(self.sigma)
        return {int(v): c / total for v, c in zip(values, counts)}


def run_urn_trials(
    scheme: FiniteUrnScheme,
    trials: int,
    rng=None,
    check_ns=None,
    k_limit: Optional[int] = None,
    trial_offset: int = 0,
) -> UrnTrialBatch:
    """Batch of independent trajectories, monitors only.

    Trial i uses the stream derived from (seed, trial_offset + i), so a batch
    split across chunks reproduces the unsplit batch exactly.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = coerce_seed(rng)
    if check_ns is None:
        check = np.empty(0, dtype=np.int64)
    else:
        check = np.asarray(check_ns, dtype=np.int64)
        if len(check) and (np.any(np.diff(check) < 0) or check[0] < 0):
            raise ValueError("check_ns must be sorted and nonnegative")
    kl = -1 if k_limit is None else int(k_limit)
    out = _urn_trials_kernel(
        np.int64(scheme.a),
        np.int64(scheme.b),
        np.int64(scheme.S0),
        np.int64(scheme.Z0),
        np.int64(trials),
        np.int64(trial_offset),
        np.uint64(seed),
        check,
        np.int64(kl),
    )
    S_at, Z_at, sigma, n_final, sup_k, sup_l, S_fin, Z_fin = out
    return UrnTrialBatch(
        scheme=scheme,
        check_ns=check,
        S_at=S_at,
        Z_at=Z_at,
        sigma=sigma,
        n_final=n_final,
        sup_K_dev=sup_k,
        sup_L_dev=sup_l,
        S_final=S_fin,
        Z_final=Z_fin,
    )


def sigma_survival(sigmas: np.ndarray, n: int) -> float:
    """Empirical P(sigma >= n); trials whose Z never hit 0 count as survivors."""
    s = np.asarray(sigmas)
    return float(np.mean((s == SIGMA_NEVER) | (s >= n)))


@dataclass
class UrnDP:
    """Exact per-step law of the finite urn, by forward dynamic programming.

    ``steps[n]`` maps (S, Z) -> probability at step n (absorbed states keep
    their frozen value forever, matching the simulator).  Probabilities are
    Fractions for M < 64 and extended-precision floats above.
    """

    scheme: FiniteUrnScheme
    exact: bool
    steps: list = field(repr=False)
    sigma: dict = field(repr=False)

    @property
    def n_steps(self) -> int:
        return len(self.steps) - 1

    def _pmf(self, n: int) -> dict:
        return self.steps[min(n, self.n_steps)]

    def joint_pmf(self, n: int) -> dict:
        return {state: float(p) for state, p in self._pmf(n).items()}

    def z_marginal(self, n: int) -> dict:
        out = {}
        for (_, Z), p in self._pmf(n).items():
            out[Z] = out.get(Z, 0.0) + float(p)
        return out

    def s_marginal(self, n: int) -> dict:
        out = {}
        for (S, _), p in self._pmf(n).items():
            out[S] = out.get(S, 0.0) + float(p)
        return out

    def mean_Z(self, n: int) -> float:
        return sum(Z * float(p) for (_, Z), p in self._pmf(n).items())

    def sigma_pmf(self) -> dict:
        return {n: float(p) for n, p in self.sigma.items()}


def dp_urn_distribution(scheme: FiniteUrnScheme, cap: int = 200) -> UrnDP:
    """Exact forward DP over reachable urn states.

    While the urn is alive, S is determined by Z (S = M - an - Z), so the
    alive front is indexed by Z alone; absorbed states accumulate in a frozen
    pool.  Runs until no alive mass remains.  ``sigma`` maps the first-hit
    step of Z = 0 to its probability, with SIGMA_NEVER holding the mass that
    froze while Z > 0.
    """
    if scheme.M > cap:
        raise ValueError(f"M = {scheme.M} exceeds the DP cap {cap}")
    a, b, M = scheme.a, scheme.b, scheme.M
    exact = M < 64
    one = Fraction(1) if exact else np.longdouble(1.0)

    def ratio(num, den):
        if exact:
            return Fraction(num, den)
        return np.longdouble(num) / np.longdouble(den)

    alive = {scheme.Z0: one}
    frozen: dict = {}
    sigma: dict = {}
    if scheme.Z0 == 0:
        sigma[0] = one
    steps = []
    n = 0
    while True:
        pmf = dict(frozen)
        for Z, p in alive.items():
            state = (M - a * n - Z, Z)
            pmf[state] = pmf.get(state, 0 * one) + p
        steps.append(pmf)
        if not alive:
            break
        nxt: dict = {}
        for Z, p in alive.items():
            S = M - a * n - Z
            total = S + Z
            if total == 0:
                frozen[(0, 0)] = frozen.get((0, 0), 0 * one) + p
                continue
            if S > 0:
                p_s = ratio(S, total) * p
                if S >= a:
                    nxt[Z] = nxt.get(Z, 0 * one) + p_s
                else:
                    frozen[(S, Z)] = frozen.get((S, Z), 0 * one) + p_s
            if Z > 0:
                p_z = ratio(Z, total) * p
                if Z >= b:
                    nz = Z - b
                    nxt[nz] = nxt.get(nz, 0 * one) + p_z
                    if nz == 0:
                        sigma[n + 1] = sigma.get(n + 1, 0 * one) + p_z
                else:
                    frozen[(S, Z)] = frozen.get((S, Z), 0 * one) + p_z
        alive = nxt
        n += 1
    never = one - sum(sigma.values(), 0 * one)
    if float(never) > 0.0:
        sigma[SIGMA_NEVER] = never
    return UrnDP(scheme=scheme, exact=exact, steps=steps, sigma=sigma)


@dataclass(frozen=True)
class DiagUrnScheme:
    """Growth urn: draw S with weight alpha1*S vs alpha2*Z, add a1 to S or a2 to Z."""

    alpha1: float
    alpha2: float
    a1: float
    a2: float
    S0: float
    Z0: float

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.a1, self.a2) <= 0:
            raise ValueError("weights and additions must be positive")
        if self.S0 <= 0 or self.Z0 <= 0:
            raise ValueError("initial counts must be positive")


@njit(cache=True, nogil=True)
def _diag_urn_kernel(alpha1, alpha2, a1, a2, S0, Z0, n_steps, n_trials, trial_offset, base_seed):
    S_fin = np.empty(n_trials, np.float64)
    Z_fin = np.empty(n_trials, np.float64)
    for trial in range(n_trials):
        seed = derive_seed_u64(base_seed, np.uint64(trial_offset + trial))
        s0, s1, s2, s3 = xs_init(seed)
        S = S0
        Z = Z0
        for _ in range(n_steps):
            w = alpha1 * S
            s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
            if u * (w + alpha2 * Z) < w:
                S += a1
            else:
                Z += a2
        S_fin[trial] = S
        Z_fin[trial] = Z
    return S_fin, Z_fin


def diag_urn_run(scheme: DiagUrnScheme, n_steps: int, rng=None) -> tuple[float, float]:
    """Final (S_n, Z_n) after n_steps draws of the weighted growth urn."""
    S, Z = diag_urn_trials(scheme, n_steps, 1, rng)
    return float(S[0]), float(Z[0])


def diag_urn_trials(
    scheme: DiagUrnScheme,
    n_steps: int,
    trials: int,
    rng=None,
    trial_offset: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Final (S_n, Z_n) arrays over independent trials."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = coerce_seed(rng)
    return _diag_urn_kernel(
        float(scheme.alpha1),
        float(scheme.alpha2),
        float(scheme.a1),
        float(scheme.a2),
        float(scheme.S0),
        float(scheme.Z0),
        np.int64(n_steps),
        np.int64(trials),
        np.int64(trial_offset),
        np.uint64(seed),
    )


@dataclass
class JansonCheck:
    scaled_samples: np.ndarray
    reference_samples: np.ndarray
    ks_d: float
    scaled_quantiles: dict
    reference_quantiles: dict


_J_QUANTS = (0.05, 0.25, 0.5, 0.75, 0.95)


def janson_sublinear_check(
    alpha: float,
    delta: float,
    S0: float,
    Z0: float,
    n: int,
    trials: int,
    rng=None,
) -> JansonCheck:
    """Compare n^{-alpha/delta} S_n against the alpha*U*V^{-alpha/delta} limit.

    Requires alpha < delta (the branch where S grows sublinearly).  U and V
    are independent Gamma(S0/alpha, 1) and Gamma(Z0/delta, 1) variables.
    """
    if not alpha < delta:
        raise ValueError("this limit requires alpha < delta")
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = coerce_seed(rng)
    scheme = DiagUrnScheme(alpha1=1.0, alpha2=1.0, a1=alpha, a2=delta, S0=S0, Z0=Z0)
    S_fin, _ = diag_urn_trials(scheme, n, trials, seed)
    scaled = S_fin * n ** (-alpha / delta)
    ref_rng = np.random.default_rng(derive_seed(seed, trials + 1))
    U = ref_rng.gamma(S0 / alpha, 1.0, size=trials)
    V = ref_rng.gamma(Z0 / delta, 1.0, size=trials)
    reference = alpha * U * V ** (-alpha / delta)
    qs = {f"q{int(q * 100):02d}": float(np.quantile(np.sort(scaled), q)) for q in _J_QUANTS}
    qr = {f"q{int(q * 100):02d}": float(np.quantile(np.sort(reference), q)) for q in _J_QUANTS}
    return JansonCheck(
        scaled_samples=scaled,
        reference_samples=reference,
        ks_d=ks_2sample(scaled, reference),
        scaled_quantiles=qs,
        reference_quantiles=qr,
    )
