"""Statistical verification toolkit.

Exponent regression, distribution distances, deviation monitors, and the one
special function (regularized incomplete beta) the verification suite needs.
Everything here is pure and deterministic; reductions over trial collections
sort their inputs first so results are independent of arrival order.
"""

import math
from dataclasses import dataclass, is_dataclass, asdict
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

# Asymptotic Kolmogorov distribution critical values c(alpha):
# one-sample threshold c/sqrt(n), two-sample c*sqrt((n+m)/(n*m)).
KS_CRITICAL = {0.10: 1.224, 0.05: 1.358, 0.02: 1.517, 0.01: 1.628}


@dataclass
class LogLogFit:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float


def fit_loglog_slope(points: Iterable[tuple[float, float]]) -> LogLogFit:
    """Ordinary least squares on (ln N, ln statistic).

    ``points`` is an iterable of (N, statistic) pairs, at least 3, all
    strictly positive.  Estimates the exponent of a power law
    statistic = C * N^slope.
    """
    pts = sorted(points)
    if len(pts) < 3:
        raise ValueError("need at least 3 points for a slope fit")
    xs = np.array([p[0] for p in pts], dtype=np.float64)
    ys = np.array([p[1] for p in pts], dtype=np.float64)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit requires strictly positive values")
    lx = np.log(xs)
    ly = np.log(ys)
    n = len(pts)
    mx = lx.mean()
    my = ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    if sxx == 0.0:
        raise ValueError("all N values identical; slope undefined")
    sxy = float(np.sum((lx - mx) * (ly - my)))
    slope = sxy / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    sse = float(np.sum(resid**2))
    sst = float(np.sum((ly - my) ** 2))
    if n > 2:
        stderr = math.sqrt(max(sse, 0.0) / (n - 2) / sxx)
    else:
        stderr = 0.0
    r2 = 1.0 if sst == 0.0 else max(0.0, min(1.0, 1.0 - sse / sst))
    return LogLogFit(slope=slope, intercept=intercept, slope_stderr=stderr, r_squared=r2)


def ks_statistic(sample: Sequence[float], cdf: Callable[[float], float]) -> float:
    """One-sample Kolmogorov-Smirnov statistic sup |F_hat - F|."""
    xs = np.sort(np.asarray(sample, dtype=np.float64))
    n = len(xs)
    if n == 0:
        raise ValueError("empty sample")
    f = np.array([cdf(x) for x in xs], dtype=np.float64)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def ks_2sample(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_hat_a - F_hat_b|."""
    a = np.sort(np.asarray(sample_a, dtype=np.float64))
    b = np.sort(np.asarray(sample_b, dtype=np.float64))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty sample")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / len(a)
    cdf_b = np.searchsorted(b, pooled, side="right") / len(b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def tv_distance(pmf1: Mapping, pmf2: Mapping) -> float:
    """Total variation distance between two pmfs given as {outcome: prob}."""
    for name, pmf in (("pmf1", pmf1), ("pmf2", pmf2)):
        total = math.fsum(pmf.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"{name} not normalized: total mass {total!r}")
        if any(p < -1e-15 for p in pmf.values()):
            raise ValueError(f"{name} has negative mass")
    support = set(pmf1) | set(pmf2)
    return 0.5 * math.fsum(abs(pmf1.get(k, 0.0) - pmf2.get(k, 0.0)) for k in support)


def sup_rel_deviation(
    series: Iterable[tuple[int, float]],
    reference: Callable[[int], float],
    n_range: tuple[int, int],
) -> float:
    """Max over sampled n in [n_range[0], n_range[1]] of |value/reference(n) - 1|.

    Raises if the reference vanishes at a sampled n inside the range.
    """
    lo, hi = n_range
    worst = 0.0
    seen = False
    for n, value in series:
        if n < lo or n > hi:
            continue
        ref = reference(n)
        if ref == 0.0:
            raise ValueError(f"reference is zero at n={n}")
        dev = abs(value / ref - 1.0)
        if dev > worst:
            worst = dev
        seen = True
    if not seen:
        raise ValueError("no series samples fall inside the requested range")
    return worst


def _beta_contfrac(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 500):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction failed for a={a}, b={b}, x={x}")


def beta_cdf(shape_a: float, shape_b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b), abs error <= 1e-10."""
    if shape_a <= 0 or shape_b <= 0:
        raise ValueError("shape parameters must be positive")
    if x < 0.0 or x > 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(shape_a + shape_b)
        - math.lgamma(shape_a)
        - math.lgamma(shape_b)
        + shape_a * math.log(x)
        + shape_b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # The continued fraction converges fast only on one side of the mean.
    if x < (shape_a + 1.0) / (shape_a + shape_b + 2.0):
        return front * _beta_contfrac(shape_a, shape_b, x) / shape_a
    return 1.0 - front * _beta_contfrac(shape_b, shape_a, 1.0 - x) / shape_b


_QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)


def summarize_trials(records: Sequence) -> dict:
    """Per-field summary (mean, median, quantiles, stderr) of trial records.

    ``records`` may be mappings or dataclasses; every field whose values are
    all numeric is summarized.  Values are sorted before reduction so the
    result does not depend on record order.
    """
    if len(records) == 0:
        raise ValueError("no records to summarize")
    rows = [asdict(r) if is_dataclass(r) else dict(r) for r in records]
    fields = rows[0].keys()
    summary = {}
    for field in fields:
        values = [row.get(field) for row in rows]
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            continue
        arr = np.sort(np.asarray(values, dtype=np.float64))
        n = len(arr)
        mean = float(np.mean(arr))
        std = float(np.std(arr, ddof=1)) if n > 1 else 0.0
        entry = {
            "n": n,
            "mean": mean,
            "stderr": std / math.sqrt(n) if n > 1 else 0.0,
            "min": float(arr[0]),
            "max": float(arr[-1]),
        }
        for q in _QUANTILE_LEVELS:
            entry[f"q{int(q * 100):02d}"] = float(np.quantile(arr, q))
        entry["median"] = entry.pop("q50")
        summary[field] = entry
    return summary
