"""Closed-form prediction layer.

The share of vertices the slower infection captures, the minority-color
exponent verdicts, the urn mean curve, the concentration horizon n0, and the
phi_beta transform these predictions are built from.  All powers of large
quantities go through log space.
"""

import math
from dataclasses import dataclass, asdict
from typing import Callable, NamedTuple, Optional

__all__ = [
    "QuadratureConfig",
    "Verdict",
    "Prediction",
    "N0Result",
    "phi",
    "phi_inverse",
    "predict_share",
    "predict_exponents",
    "urn_mean_curve",
    "compute_n0",
    "eq4_bounds",
]


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    max_depth: int = 40

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass(frozen=True)
class Verdict:
    """Which color ends in the minority and with what polynomial exponent."""

    minority: str  # "blue" | "red" | "boundary"
    exponent: float
    gamma: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Prediction:
    """Predicted final share of the slower color among initially uncolored vertices."""

    share_ratio: float
    bounds: tuple[float, float]
    verdict: Optional[Verdict] = None

    def __post_init__(self):
        if not (0.0 <= self.share_ratio <= 1.0):
            raise ValueError(f"share_ratio {self.share_ratio} outside [0, 1]")
        lo, hi = self.bounds
        if lo > hi:
            raise ValueError(f"bounds out of order: {self.bounds}")

    def as_dict(self) -> dict:
        out = {"share_ratio": self.share_ratio, "bounds": list(self.bounds)}
        out["verdict"] = self.verdict.as_dict() if self.verdict is not None else None
        return out


class N0Result(NamedTuple):
    n0: int
    threshold_exceeded: bool


def _log_phi(beta: float, t: float) -> float:
    return (math.log1p(-t) - beta * math.log(t)) / (beta - 1.0)


def phi(beta: float, t: float) -> float:
    """(1-t)^{1/(beta-1)} / t^{beta/(beta-1)} on 0 < t < 1, log-space."""
    if beta == 1.0:
        raise ValueError("phi is defined for beta != 1 only")
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if not (0.0 < t < 1.0):
        raise ValueError("t must lie strictly inside (0, 1)")
    lp = _log_phi(beta, t)
    if lp > 709.0:
        return math.inf
    return math.exp(lp)


def phi_inverse(beta: float, s: float, tol: float = 1e-13) -> float:
    """Inverse of phi on its monotone branch via bisection.

    phi is decreasing for beta > 1 (range (0, inf), phi_inverse(0) = 1) and
    increasing for beta < 1 (phi_inverse(0) = 0).  Stops when the bracket
    width drops below ``tol``.
    """
    if beta == 1.0:
        raise ValueError("phi_inverse is defined for beta != 1 only")
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if s < 0.0:
        raise ValueError("s must be >= 0")
    decreasing = beta > 1.0
    if s == 0.0:
        return 1.0 if decreasing else 0.0
    if math.isinf(s):
        return 0.0 if decreasing else 1.0
    log_s = math.log(s)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if hi - lo < tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        above = _log_phi(beta, mid) > log_s
        # decreasing branch: phi(mid) > s means the root lies right of mid
        if above == decreasing:
            lo = mid
        else:
            hi = mid
    raise ArithmeticError(
        f"phi_inverse did not converge: beta={beta}, s={s}, bracket=({lo}, {hi})"
    )


def _adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    abs_tol: float,
    rel_tol: float,
    max_depth: int,
) -> float:
    """Recursive adaptive Simpson with Richardson correction."""

    def recurse(x0, x2, f0, f1, f2, whole, tol, depth):
        x1 = 0.5 * (x0 + x2)
        lm = 0.5 * (x0 + x1)
        rm = 0.5 * (x1 + x2)
        flm = f(lm)
        frm = f(rm)
        left = (x1 - x0) / 6.0 * (f0 + 4.0 * flm + f1)
        right = (x2 - x1) / 6.0 * (f1 + 4.0 * frm + f2)
        delta = left + right - whole
        if abs(delta) <= 15.0 * max(tol, rel_tol * abs(left + right)):
            return left + right + delta / 15.0
        if depth <= 0:
            raise ArithmeticError(
                f"adaptive quadrature did not converge on [{x0}, {x2}]"
            )
        half = 0.5 * tol
        return recurse(x0, x1, f0, flm, f1, left, half, depth - 1) + recurse(
            x1, x2, f1, frm, f2, right, half, depth - 1
        )

    fa = f(a)
    fm = f(0.5 * (a + b))
    fb = f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return recurse(a, b, fa, fm, fb, whole, abs_tol, max_depth)


def predict_share(
    beta: float,
    X0: int,
    Y0: int,
    Z0: int,
    M: int,
    d: int,
    quad: Optional[QuadratureConfig] = None,
    c: float = 1.0,
    C: float = 1.0,
) -> Prediction:
    """Predicted limit of (captured-by-red)/(initially uncolored vertices).

    For beta = 1 this is Y0/(X0+Y0).  Otherwise the red fraction of active
    half-edges when a fraction t of captures remains is
    s(t) = phi_inverse(M * K0^{1/(beta-1)} * (t^{1/d} - (Z0/M) * t^{(d-1)/d})),
    K0 = X0/Y0^beta, and a capture goes red with probability
    s/(beta - (beta-1)s) (red weight Y against blue weight beta*X), so the
    share is the integral of that ratio over t in (0, 1).  Computed with
    adaptive Simpson on [eps0, 1] plus a tail estimate on [0, eps0] whose
    error is below abs_tol/10 (the integrand lies in [0, 1]).  The attached
    bounds use the caller-supplied constants (c, C).
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if X0 < 1 or Y0 < 1 or Z0 < 0:
        raise ValueError("need X0, Y0 >= 1 and Z0 >= 0")
    if M != X0 + Y0 + Z0:
        raise ValueError("M must equal X0 + Y0 + Z0")
    if d < 2:
        raise ValueError("d must be >= 2")
    bounds = eq4_bounds(beta, X0, Y0, M, c, C)
    if beta == 1.0:
        share = Y0 / (X0 + Y0)
        return Prediction(share_ratio=share, bounds=bounds)
    cfg = quad if quad is not None else QuadratureConfig()
    log_pref = math.log(M) + (math.log(X0) - beta * math.log(Y0)) / (beta - 1.0)
    z_frac = Z0 / M

    def integrand(t: float) -> float:
        if t <= 0.0:
            # limit value: the argument of phi_inverse tends to 0
            return 1.0 if beta > 1.0 else 0.0
        factor = t ** (1.0 / d) - z_frac * t ** ((d - 1.0) / d)
        if factor <= 0.0:
            return 1.0 if beta > 1.0 else 0.0
        log_arg = log_pref + math.log(factor)
        if log_arg > 709.0:
            s = math.inf
        else:
            s = math.exp(log_arg)
        frac = phi_inverse(beta, s, tol=min(1e-13, cfg.abs_tol * 1e-3))
        return frac / (beta - (beta - 1.0) * frac)

    eps0 = min(cfg.abs_tol / 10.0, 1e-6)
    tail = eps0 * integrand(0.5 * eps0)
    body = _adaptive_simpson(integrand, eps0, 1.0, cfg.abs_tol, cfg.rel_tol, cfg.max_depth)
    share = min(1.0, max(0.0, body + tail))
    return Prediction(share_ratio=share, bounds=bounds)


def predict_exponents(
    case: str,
    beta: float,
    alpha1: Optional[float] = None,
    alpha2: Optional[float] = None,
) -> Verdict:
    """Minority color and its polynomial exponent for the three seeding regimes.

    ``case`` is one of "both_polynomial" (seeds N^alpha1 and N^alpha2),
    "both_constant" (two constant-size seeds), or
    "blue_constant_red_polynomial" (blue constant, red N^alpha2).
    gamma = 1 - alpha1 - beta*(1-alpha2) decides the first case;
    |gamma| <= 1e-12 is reported as the boundary, where both exponent
    formulas agree and equal 1.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if case == "both_polynomial":
        if alpha1 is None or alpha2 is None:
            raise ValueError("both_polynomial needs alpha1 and alpha2")
        if not (0.0 < alpha1 < 1.0 and 0.0 < alpha2 < 1.0):
            raise ValueError("exponents must lie in (0, 1)")
        gamma = 1.0 - alpha1 - beta * (1.0 - alpha2)
        if abs(gamma) <= 1e-12:
            return Verdict(minority="boundary", exponent=1.0, gamma=gamma)
        if gamma > 0.0:
            return Verdict(
                minority="blue", exponent=alpha1 + beta * (1.0 - alpha2), gamma=gamma
            )
        return Verdict(
            minority="red", exponent=alpha2 + (1.0 - alpha1) / beta, gamma=gamma
        )
    if case == "both_constant":
        if beta <= 1.0:
            return Verdict(minority="blue", exponent=beta)
        return Verdict(minority="red", exponent=1.0 / beta)
    if case == "blue_constant_red_polynomial":
        if alpha2 is None:
            raise ValueError("blue_constant_red_polynomial needs alpha2")
        if not (0.0 < alpha2 < 1.0):
            raise ValueError("exponents must lie in (0, 1)")
        if beta * (1.0 - alpha2) <= 1.0:
            return Verdict(minority="blue", exponent=beta * (1.0 - alpha2))
        return Verdict(minority="red", exponent=alpha2 + 1.0 / beta)
    raise ValueError(f"unknown case {case!r}")


def urn_mean_curve(Z0: int, M: int, d: int, n: int) -> float:
    """Deterministic shadow of the uncolored half-edge count: Z0*(1-2n/M)^{d/2}."""
    if not (0 <= n < M / 2):
        raise ValueError("need 0 <= n < M/2")
    return Z0 * (1.0 - 2.0 * n / M) ** (d / 2.0)


def compute_n0(X0: int, Y0: int, beta: float, M: int, L_M: float) -> N0Result:
    """Largest n with M - 2n >= L_M * (M^{(1-beta)/2}/K0 v K0/M^{(1-beta)/2})^{2/(1+beta)}.

    K0 = X0/Y0^beta.  Returns (0, True) when even n = 0 fails the inequality.
    """
    if X0 < 1 or Y0 < 1:
        raise ValueError("need X0, Y0 >= 1")
    if L_M <= 0:
        raise ValueError("L_M must be positive")
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    log_k0 = math.log(X0) - beta * math.log(Y0)
    centered = 0.5 * (1.0 - beta) * math.log(M) - log_k0
    threshold = L_M * math.exp(2.0 * abs(centered) / (1.0 + beta))
    if threshold > M:
        return N0Result(0, True)
    return N0Result(int(math.floor((M - threshold) / 2.0)), False)


def eq4_bounds(
    beta: float, X0: int, Y0: int, M: int, c: float = 1.0, C: float = 1.0
) -> tuple[float, float]:
    """Constant-factor share bracket: (c*q ^ c, C*q ^ 1) with q = (Y0/M)(M/X0)^{1/beta}."""
    if beta <= 0.0 or X0 <= 0 or Y0 <= 0 or M <= 0:
        raise ValueError("inputs must be positive")
    if c <= 0.0 or C <= 0.0:
        raise ValueError("constants must be positive")
    log_q = math.log(Y0) - math.log(M) + (math.log(M) - math.log(X0)) / beta
    q = math.exp(log_q)
    return (min(c * q, c), min(C * q, 1.0))
