"""Command-line front door.

Subcommands: predict | rrg-chain | rrg-graph | torus | urn | diag-urn |
sweep | estimate-exponent | validate.  Configuration comes from a JSON file
(--config) and/or flags; flags override the file.  Every simulation kind
requires an explicit master seed — there is no wall-clock seeding — and
trial i always uses the RNG stream derived from (master seed, i), so output
is byte-identical for any --workers value.  The only nondeterministic CSV
column is wall_time_s, documented and placed last.

Exit codes: 0 success, 1 runtime error, 2 configuration error.
Floats are serialized with 17 significant digits for bit-stable round trips.
The FPPRACE_OUT_DIR environment variable supplies the default output
directory (nothing else is read from the environment).
"""

import argparse
import csv
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import fpp_engine, halfedge_chain, stats, theory, urn
from ._rng import derive_seed

__all__ = ["ExperimentConfig", "TrialRecord", "run", "validate", "main"]

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

_SIM_KINDS = ("rrg-chain", "rrg-graph", "torus", "urn", "diag-urn", "sweep")
_ALL_KINDS = _SIM_KINDS + ("predict", "estimate-exponent")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    trials: int = 100
    seed: Optional[int] = None
    workers: int = 1
    out: Optional[str] = None
    fmt: str = "csv"


@dataclass
class TrialRecord:
    trial: int
    seed: int
    params: dict
    outputs: dict
    wall_time_s: float

    def flat(self) -> dict:
        row = {"trial": self.trial, "seed": self.seed}
        row.update(self.params)
        row.update(self.outputs)
        row["wall_time_s"] = self.wall_time_s
        return row


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _write_records(stream, header, rows, fmt):
    if fmt == "csv":
        stream.write(",".join(header) + "\n")
        for row in rows:
            stream.write(",".join(_fmt_value(row[h]) for h in header) + "\n")
    else:
        stream.write(json.dumps([{h: row[h] for h in header} for row in rows], indent=1))
        stream.write("\n")


def _summary_path(out: str) -> str:
    base = out[:-4] if out.endswith(".csv") else out
    return base + ".summary.json"


def _parse_count(spec, N: int) -> int:
    """Seed-count spec: plain integer, 'N^a' for ceil(N^a), or 'k*N^a'."""
    if isinstance(spec, (int, np.integer)):
        return int(spec)
    text = str(spec).strip()
    if re.fullmatch(r"\d+", text):
        return int(text)
    m = re.fullmatch(r"(?:(\d+)\s*\*\s*)?N\s*\^\s*([0-9.]+)", text)
    if not m:
        raise ConfigError(f"cannot parse count spec {spec!r}; use an integer, 'N^a', or 'k*N^a'")
    coeff = int(m.group(1)) if m.group(1) else 1
    return coeff * int(math.ceil(N ** float(m.group(2))))


def _parse_ngrid(spec) -> list:
    """'start:stop:xFACTOR' (geometric, inclusive) or comma-separated list."""
    if isinstance(spec, (list, tuple)):
        return [int(v) for v in spec]
    text = str(spec).strip()
    m = re.fullmatch(r"(\d+):(\d+):x(\d+)", text)
    if m:
        start, stop, factor = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if start < 1 or factor < 2 or stop < start:
            raise ConfigError(f"bad N grid {spec!r}")
        grid = []
        v = start
        while v <= stop:
            grid.append(v)
            v *= factor
        return grid
    if re.fullmatch(r"\d+(,\d+)*", text):
        return [int(v) for v in text.split(",")]
    raise ConfigError(f"cannot parse N grid {spec!r}")


def _chunk_bounds(trials: int, workers: int) -> list:
    w = max(1, min(workers, trials))
    base, extra = divmod(trials, w)
    bounds = []
    offset = 0
    for i in range(w):
        count = base + (1 if i < extra else 0)
        if count:
            bounds.append((offset, count))
            offset += count
    return bounds


def _parallel_rows(trials: int, workers: int, chunk_fn) -> list:
    """Run chunk_fn(offset, count) -> list[row dict] over a thread pool.

    Chunks are contiguous and merged in offset order; every row's content is
    a function of (master seed, trial index) alone, so the worker count can
    only influence wall_time_s.
    """
    bounds = _chunk_bounds(trials, workers)
    if len(bounds) == 1:
        return chunk_fn(*bounds[0])
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        futures = [pool.submit(chunk_fn, off, cnt) for off, cnt in bounds]
        chunks = [f.result() for f in futures]
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------------------
# kind runners: each returns (header, rows, extra_summary)


def _run_rrg_chain(cfg: ExperimentConfig):
    p = cfg.params
    N, d, beta = p["N"], p["d"], p["beta"]
    B0 = _parse_count(p["B0"], N)
    R0 = _parse_count(p["R0"], N)
    chain_params = halfedge_chain.ChainParams(N=N, d=d, beta=beta)
    warmup_k = p.get("warmup_k")
    master = cfg.seed

    if warmup_k is None:
        base_params = {"N": N, "d": d, "beta": beta, "B0": B0, "R0": R0}

        def chunk_fn(offset, count):
            t0 = time.perf_counter()
            B, R, U, steps, _ = halfedge_chain.run_race_trials(
                chain_params, B0, R0, count, master, trial_offset=offset
            )
            per_trial = (time.perf_counter() - t0) / count
            rows = []
            for i in range(count):
                idx = offset + i
                rec = TrialRecord(
                    trial=idx,
                    seed=derive_seed(master, idx),
                    params=base_params,
                    outputs={
                        "B_bar": int(B[i]),
                        "R_bar": int(R[i]),
                        "U": int(U[i]),
                        "steps": int(steps[i]),
                    },
                    wall_time_s=per_trial,
                )
                rows.append(rec.flat())
            return rows

        header = ["trial", "seed", "N", "d", "beta", "B0", "R0",
                  "B_bar", "R_bar", "U", "steps", "wall_time_s"]
        return header, _parallel_rows(cfg.trials, cfg.workers, chunk_fn), {}

    k = int(warmup_k)
    base_params = {"N": N, "d": d, "beta": beta, "warmup_k": k, "B0": B0, "R0": R0}

    def chunk_fn(offset, count):
        t0 = time.perf_counter()
        X_warm, B, R, U, steps, attempts, failed = halfedge_chain.run_warmup_race_trials(
            chain_params, k, B0, R0, count, master, trial_offset=offset
        )
        per_trial = (time.perf_counter() - t0) / count
        rows = []
        for i in range(count):
            idx = offset + i
            rec = TrialRecord(
                trial=idx,
                seed=derive_seed(master, idx),
                params=base_params,
                outputs={
                    "X_warm": int(X_warm[i]),
                    "attempts": int(attempts[i]),
                    "failed": bool(failed[i]),
                    "B_bar": int(B[i]),
                    "R_bar": int(R[i]),
                    "U": int(U[i]),
                    "steps": int(steps[i]),
                },
                wall_time_s=per_trial,
            )
            rows.append(rec.flat())
        return rows

    header = ["trial", "seed", "N", "d", "beta", "warmup_k", "B0", "R0",
              "X_warm", "attempts", "failed", "B_bar", "R_bar", "U", "steps", "wall_time_s"]
    return header, _parallel_rows(cfg.trials, cfg.workers, chunk_fn), {}


def _run_rrg_graph(cfg: ExperimentConfig):
    p = cfg.params
    N, d, beta = p["N"], p["d"], p["beta"]
    B0 = _parse_count(p["B0"], N)
    R0 = _parse_count(p["R0"], N)
    mode = p.get("mode", "multigraph")
    master = cfg.seed
    base_params = {"N": N, "d": d, "beta": beta, "B0": B0, "R0": R0, "mode": mode}

    def chunk_fn(offset, count):
        rows = []
        for i in range(offset, offset + count):
            t0 = time.perf_counter()
            trial_seed = derive_seed(master, i)
            result = fpp_engine.race_on_configuration_model(
                N, d, B0, R0, beta, mode=mode, rng=trial_seed
            )
            elapsed = time.perf_counter() - t0
            rec = TrialRecord(
                trial=i,
                seed=trial_seed,
                params=base_params,
                outputs={
                    "B_bar": result.B_bar,
                    "R_bar": result.R_bar,
                    "U": result.U,
                    "events": result.B_bar + result.R_bar - B0 - R0,
                },
                wall_time_s=elapsed,
            )
            rows.append(rec.flat())
        return rows

    header = ["trial", "seed", "N", "d", "beta", "B0", "R0", "mode",
              "B_bar", "R_bar", "U", "events", "wall_time_s"]
    return header, _parallel_rows(cfg.trials, cfg.workers, chunk_fn), {}


def _run_torus(cfg: ExperimentConfig):
    p = cfg.params
    n, dim, epsilon, beta = p["n"], p["dim"], p["epsilon"], p["beta"]
    N = n**dim
    master = cfg.seed
    base_params = {"n": n, "dim": dim, "epsilon": epsilon, "beta": beta, "N": N}

    def chunk_fn(offset, count):
        rows = []
        for i in range(offset, offset + count):
            t0 = time.perf_counter()
            trial_seed = derive_seed(master, i)
            result = fpp_engine.simulate_torus_experiment(n, dim, epsilon, beta, rng=trial_seed)
            elapsed = time.perf_counter() - t0
            rec = TrialRecord(
                trial=i,
                seed=trial_seed,
                params=base_params,
                outputs={"B_bar": result.B_bar, "R_bar": result.R_bar, "U": result.U},
                wall_time_s=elapsed,
            )
            rows.append(rec.flat())
        return rows

    header = ["trial", "seed", "n", "dim", "epsilon", "beta", "N",
              "B_bar", "R_bar", "U", "wall_time_s"]
    return header, _parallel_rows(cfg.trials, cfg.workers, chunk_fn), {}


def _run_urn(cfg: ExperimentConfig):
    p = cfg.params
    scheme = urn.FiniteUrnScheme(a=p["a"], b=p["b"], S0=p["S0"], Z0=p["Z0"])
    k_limit = p.get("k_limit")
    master = cfg.seed
    base_params = {"a": scheme.a, "b": scheme.b, "S0": scheme.S0, "Z0": scheme.Z0}

    def chunk_fn(offset, count):
        t0 = time.perf_counter()
        batch = urn.run_urn_trials(
            scheme, count, master, k_limit=k_limit, trial_offset=offset
        )
        per_trial = (time.perf_counter() - t0) / count
        rows = []
        for i in range(count):
            idx = offset + i
            rec = TrialRecord(
                trial=idx,
                seed=derive_seed(master, idx),
                params=base_params,
                outputs={
                    "sigma": int(batch.sigma[i]),
                    "n_final": int(batch.n_final[i]),
                    "S_final": int(batch.S_final[i]),
                    "Z_final": int(batch.Z_final[i]),
                    "sup_K_dev": float(batch.sup_K_dev[i]),
                    "sup_L_dev": float(batch.sup_L_dev[i]),
                },
                wall_time_s=per_trial,
            )
            rows.append(rec.flat())
        return rows

    header = ["trial", "seed", "a", "b", "S0", "Z0",
              "sigma", "n_final", "S_final", "Z_final", "sup_K_dev", "sup_L_dev",
              "wall_time_s"]
    rows = _parallel_rows(cfg.trials, cfg.workers, chunk_fn)
    extra = {}
    if p.get("dp_check"):
        dp = urn.dp_urn_distribution(scheme)
        empirical = {}
        for row in rows:
            empirical[row["sigma"]] = empirical.get(row["sigma"], 0.0) + 1.0 / len(rows)
        tv = stats.tv_distance(empirical, dp.sigma_pmf())
        extra["tv_sigma_vs_dp"] = tv
        print(f"TV(empirical sigma, DP sigma) = {tv:.6f}", file=sys.stderr)
    return header, rows, extra


def _run_diag_urn(cfg: ExperimentConfig):
    p = cfg.params
    scheme = urn.DiagUrnScheme(
        alpha1=p["alpha1"], alpha2=p["alpha2"], a1=p["a1"], a2=p["a2"],
        S0=p["S0"], Z0=p["Z0"],
    )
    n_steps = p["steps"]
    master = cfg.seed
    base_params = {
        "alpha1": scheme.alpha1, "alpha2": scheme.alpha2,
        "a1": scheme.a1, "a2": scheme.a2,
        "S0": scheme.S0, "Z0": scheme.Z0, "steps": n_steps,
    }

    def chunk_fn(offset, count):
        t0 = time.perf_counter()
        S_fin, Z_fin = urn.diag_urn_trials(scheme, n_steps, count, master, trial_offset=offset)
        per_trial = (time.perf_counter() - t0) / count
        rows = []
        for i in range(count):
            idx = offset + i
            rec = TrialRecord(
                trial=idx,
                seed=derive_seed(master, idx),
                params=base_params,
                outputs={"S_final": float(S_fin[i]), "Z_final": float(Z_fin[i])},
                wall_time_s=per_trial,
            )
            rows.append(rec.flat())
        return rows

    header = ["trial", "seed", "alpha1", "alpha2", "a1", "a2", "S0", "Z0", "steps",
              "S_final", "Z_final", "wall_time_s"]
    return header, _parallel_rows(cfg.trials, cfg.workers, chunk_fn), {}


def _run_predict(cfg: ExperimentConfig):
    p = cfg.params
    out: dict = {}
    case = p.get("case")
    if case is not None:
        aliases = {
            "i": "both_polynomial",
            "ii": "both_constant",
            "iii": "blue_constant_red_polynomial",
        }
        case_name = aliases.get(case, case)
        verdict = theory.predict_exponents(
            case_name, p["beta"], alpha1=p.get("alpha1"), alpha2=p.get("alpha2")
        )
        out["verdict"] = verdict.as_dict()
        out["case"] = case_name
    if p.get("N") is not None:
        N, d, beta = p["N"], p["d"], p["beta"]
        B0 = _parse_count(p["B0"], N)
        R0 = _parse_count(p["R0"], N)
        X0, Y0 = d * B0, d * R0
        Z0 = d * (N - B0 - R0)
        prediction = theory.predict_share(beta, X0, Y0, Z0, d * N, d)
        out["share"] = prediction.as_dict()
        out["share_inputs"] = {"N": N, "d": d, "beta": beta, "B0": B0, "R0": R0,
                               "X0": X0, "Y0": Y0, "Z0": Z0}
    if not out:
        raise ConfigError("predict needs --case and/or share inputs (--N --d --B0 --R0)")
    return out


def _run_sweep(cfg: ExperimentConfig):
    p = cfg.params
    inner_kind = p.get("kind", "rrg-chain")
    if inner_kind != "rrg-chain":
        raise ConfigError("sweep currently supports kind 'rrg-chain'")
    grid = _parse_ngrid(p["Ngrid"])
    out_dir = Path(cfg.out or os.environ.get("FPPRACE_OUT_DIR") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    written, skipped = [], []
    for N in grid:
        shard = out_dir / f"shard_N{N}.csv"
        if shard.exists():
            skipped.append(str(shard))
            continue
        sub = ExperimentConfig(
            kind="rrg-chain",
            params={"N": N, "d": p["d"], "beta": p["beta"], "B0": p["B0"], "R0": p["R0"],
                    "warmup_k": p.get("warmup_k")},
            trials=cfg.trials,
            seed=cfg.seed,
            workers=cfg.workers,
        )
        header, rows, _ = _run_rrg_chain(sub)
        tmp = shard.with_suffix(".csv.tmp")
        with open(tmp, "w") as fh:
            _write_records(fh, header, rows, "csv")
        tmp.rename(shard)
        written.append(str(shard))
    return {"written": written, "skipped": skipped, "grid": grid, "dir": str(out_dir)}


def _run_estimate_exponent(cfg: ExperimentConfig):
    p = cfg.params
    shard_dir = Path(p.get("dir") or cfg.out or os.environ.get("FPPRACE_OUT_DIR") or ".")
    column = p.get("column", "R_bar")
    use_mean = bool(p.get("use_mean"))
    shards = sorted(shard_dir.glob("shard_N*.csv"))
    if not shards:
        raise ConfigError(f"no shard_N*.csv files in {shard_dir}")
    by_n: dict = {}
    for shard in shards:
        with open(shard) as fh:
            for row in csv.DictReader(fh):
                by_n.setdefault(int(row["N"]), []).append(float(row[column]))
    reducer = np.mean if use_mean else np.median
    points = sorted((N, float(reducer(np.sort(np.array(vals))))) for N, vals in by_n.items())
    fit = stats.fit_loglog_slope(points)
    return {
        "column": column,
        "statistic": "mean" if use_mean else "median",
        "points": [[n, v] for n, v in points],
        "slope": fit.slope,
        "intercept": fit.intercept,
        "slope_stderr": fit.slope_stderr,
        "r_squared": fit.r_squared,
    }


# ---------------------------------------------------------------------------
# validation


def _require(violations, params, names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        violations.append(f"missing parameters: {', '.join(missing)}")
    return not missing


def validate(config: ExperimentConfig) -> list:
    """Precondition report; returns a list of violation strings (empty = ok)."""
    v: list = []
    p = config.params
    kind = config.kind
    if kind not in _ALL_KINDS:
        return [f"unknown kind {kind!r}"]
    if kind in _SIM_KINDS:
        if config.seed is None:
            v.append("master seed is mandatory for simulation kinds (--seed)")
        elif not (0 <= config.seed < 2**64):
            v.append("seed must fit in 64 bits")
        if config.trials < 1:
            v.append("trials must be >= 1")
        if config.workers < 1:
            v.append("workers must be >= 1")
    if config.fmt not in ("csv", "json"):
        v.append(f"unknown format {config.fmt!r}")

    if kind in ("rrg-chain", "rrg-graph"):
        if _require(v, p, ["N", "d", "beta", "B0", "R0"]):
            N, d, beta = p["N"], p["d"], p["beta"]
            if N < 1:
                v.append("N must be positive")
            if d < 3:
                v.append("d must be >= 3")
            if (N * d) % 2 != 0:
                v.append(f"d*N = {N * d} is odd; no d-regular graph exists")
            if beta <= 0:
                v.append("beta must be positive")
            try:
                B0 = _parse_count(p["B0"], max(N, 1))
                R0 = _parse_count(p["R0"], max(N, 1))
                warmup_k = p.get("warmup_k")
                if warmup_k is not None:
                    if kind != "rrg-chain":
                        v.append("warm-up is only available for rrg-chain")
                    elif not (1 <= int(warmup_k) < B0):
                        v.append("need 1 <= warmup_k < B0 (B0 is the warm-up target)")
                if B0 < 1 or R0 < 1:
                    v.append("B0 and R0 must be >= 1")
                if B0 + R0 > N:
                    v.append(f"B0 + R0 = {B0 + R0} exceeds N = {N}")
            except ConfigError as exc:
                v.append(str(exc))
        if kind == "rrg-graph" and p.get("mode", "multigraph") not in (
            "multigraph", "reject_to_simple",
        ):
            v.append(f"unknown sampling mode {p.get('mode')!r}")
    elif kind == "torus":
        if _require(v, p, ["n", "dim", "epsilon", "beta"]):
            if p["n"] < 3:
                v.append("torus side n must be >= 3")
            if p["dim"] < 1:
                v.append("torus dim must be >= 1")
            if not (0 < p["epsilon"] < 1):
                v.append("epsilon must lie in (0, 1)")
            if p["beta"] <= 0:
                v.append("beta must be positive")
    elif kind == "urn":
        if _require(v, p, ["a", "b", "S0", "Z0"]):
            if not (0 < p["a"] < p["b"]):
                v.append("need 0 < a < b")
            if p["S0"] < 0 or p["Z0"] < 0 or p["S0"] + p["Z0"] <= 0:
                v.append("need S0, Z0 >= 0 and S0 + Z0 > 0")
    elif kind == "diag-urn":
        if _require(v, p, ["alpha1", "alpha2", "a1", "a2", "S0", "Z0", "steps"]):
            if min(p["alpha1"], p["alpha2"], p["a1"], p["a2"]) <= 0:
                v.append("weights and additions must be positive")
            if p["S0"] <= 0 or p["Z0"] <= 0:
                v.append("initial counts must be positive")
            if p["steps"] < 0:
                v.append("steps must be >= 0")
    elif kind == "sweep":
        if _require(v, p, ["d", "beta", "B0", "R0", "Ngrid"]):
            try:
                grid = _parse_ngrid(p["Ngrid"])
                if not grid:
                    v.append("empty N grid")
                for N in grid:
                    if (N * p["d"]) % 2 != 0:
                        v.append(f"d*N odd at N = {N}")
            except ConfigError as exc:
                v.append(str(exc))
            if p["beta"] <= 0:
                v.append("beta must be positive")
    elif kind == "predict":
        case = p.get("case")
        share_mode = p.get("N") is not None
        if case is None and not share_mode:
            v.append("predict needs --case and/or --N --d --B0 --R0")
        if case in ("i", "both_polynomial") and (
            p.get("alpha1") is None or p.get("alpha2") is None
        ):
            v.append("case i needs --alpha1 and --alpha2")
        if case in ("iii", "blue_constant_red_polynomial") and p.get("alpha2") is None:
            v.append("case iii needs --alpha2")
        for name in ("alpha1", "alpha2"):
            val = p.get(name)
            if val is not None and not (0 < val < 1):
                v.append(f"{name} must lie in (0, 1)")
        if p.get("beta") is None:
            v.append("predict needs --beta")
        elif p["beta"] <= 0:
            v.append("beta must be positive")
        if share_mode:
            if _require(v, p, ["N", "d", "B0", "R0"]):
                try:
                    B0 = _parse_count(p["B0"], p["N"])
                    R0 = _parse_count(p["R0"], p["N"])
                    if B0 + R0 > p["N"]:
                        v.append("B0 + R0 exceeds N")
                except ConfigError as exc:
                    v.append(str(exc))
    elif kind == "estimate-exponent":
        if p.get("column") not in (None, "B_bar", "R_bar", "U", "steps"):
            v.append(f"unsupported column {p.get('column')!r}")
    return v


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sp, sim: bool):
    sp.add_argument("--config", type=str, default=None, help="JSON config file")
    sp.add_argument("--out", type=str, default=None, help="output path")
    if sim:
        sp.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                        help="master seed (mandatory, 64-bit)")
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--format", dest="fmt", choices=["csv", "json"], default=None)


_PARAM_KEYS = {
    "rrg-chain": ["N", "d", "beta", "B0", "R0", "warmup_k"],
    "rrg-graph": ["N", "d", "beta", "B0", "R0", "mode"],
    "torus": ["n", "dim", "epsilon", "beta"],
    "urn": ["a", "b", "S0", "Z0", "k_limit", "dp_check"],
    "diag-urn": ["alpha1", "alpha2", "a1", "a2", "S0", "Z0", "steps"],
    "sweep": ["kind", "d", "beta", "B0", "R0", "Ngrid", "warmup_k"],
    "predict": ["case", "alpha1", "alpha2", "beta", "N", "d", "B0", "R0"],
    "estimate-exponent": ["dir", "column", "use_mean"],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpprace",
        description="Monte Carlo laboratory for two competing infections on "
        "random regular graphs and tori, with urn companions and "
        "closed-form prediction checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("predict", help="closed-form verdicts and share predictions")
    _add_common(sp, sim=False)
    sp.add_argument("--case", type=str, default=None,
                    help="i|ii|iii (or the long regime names)")
    sp.add_argument("--alpha1", type=float, default=None)
    sp.add_argument("--alpha2", type=float, default=None)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--B0", type=str, default=None)
    sp.add_argument("--R0", type=str, default=None)

    sp = sub.add_parser("rrg-chain", help="half-edge chain races")
    _add_common(sp, sim=True)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--B0", type=str, default=None, help="count, 'N^a', or 'k*N^a'")
    sp.add_argument("--R0", type=str, default=None, help="count, 'N^a', or 'k*N^a'")
    sp.add_argument("--warmup-k", dest="warmup_k", type=int, default=None,
                    help="grow blue alone from k seeds until B0, then inject R0")

    sp = sub.add_parser("rrg-graph", help="explicit configuration-model races")
    _add_common(sp, sim=True)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--B0", type=str, default=None)
    sp.add_argument("--R0", type=str, default=None)
    sp.add_argument("--mode", choices=["multigraph", "reject_to_simple"], default=None)

    sp = sub.add_parser("torus", help="torus head-start experiments")
    _add_common(sp, sim=True)
    sp.add_argument("--n", type=int, default=None, help="side length")
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--beta", type=float, default=None)

    sp = sub.add_parser("urn", help="finite urn trials")
    _add_common(sp, sim=True)
    sp.add_argument("--a", type=int, default=None)
    sp.add_argument("--b", type=int, default=None)
    sp.add_argument("--S0", type=int, default=None)
    sp.add_argument("--Z0", type=int, default=None)
    sp.add_argument("--k-limit", dest="k_limit", type=int, default=None,
                    help="window for the sup |K_n - 1| monitor")
    sp.add_argument("--dp-check", dest="dp_check", action="store_true", default=None,
                    help="compare the sigma law against the exact DP oracle")

    sp = sub.add_parser("diag-urn", help="weighted diagonal growth urn trials")
    _add_common(sp, sim=True)
    sp.add_argument("--alpha1", type=float, default=None)
    sp.add_argument("--alpha2", type=float, default=None)
    sp.add_argument("--a1", type=float, default=None)
    sp.add_argument("--a2", type=float, default=None)
    sp.add_argument("--S0", type=float, default=None)
    sp.add_argument("--Z0", type=float, default=None)
    sp.add_argument("--steps", type=int, default=None)

    sp = sub.add_parser("sweep", help="N-grid sweep writing per-N shard CSVs")
    _add_common(sp, sim=True)
    sp.add_argument("--kind", type=str, default=None, help="inner kind (rrg-chain)")
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--B0", type=str, default=None)
    sp.add_argument("--R0", type=str, default=None)
    sp.add_argument("--Ngrid", type=str, default=None, help="'lo:hi:x2' or 'a,b,c'")
    sp.add_argument("--warmup-k", dest="warmup_k", type=int, default=None)

    sp = sub.add_parser("estimate-exponent", help="log-log fit over sweep shards")
    _add_common(sp, sim=False)
    sp.add_argument("--dir", type=str, default=None, help="shard directory")
    sp.add_argument("--column", type=str, default=None, help="B_bar or R_bar")
    sp.add_argument("--use-mean", dest="use_mean", action="store_true", default=None,
                    help="regress on means instead of medians")

    sp = sub.add_parser("validate", help="print precondition violations, exit 0")
    _add_common(sp, sim=True)
    sp.add_argument("--kind", type=str, required=False, default=None)
    for key, arg_type in [
        ("N", int), ("d", int), ("beta", float), ("B0", str), ("R0", str),
        ("warmup_k", int), ("mode", str), ("n", int), ("dim", int),
        ("epsilon", float), ("a", int), ("b", int), ("S0", float), ("Z0", float),
        ("alpha1", float), ("alpha2", float), ("a1", float), ("a2", float),
        ("steps", int), ("Ngrid", str), ("case", str), ("column", str),
    ]:
        flag = "--" + key.replace("_", "-")
        sp.add_argument(flag, dest=key, type=arg_type, default=None)

    return parser


def _build_config(args) -> ExperimentConfig:
    kind = args.command if args.command != "validate" else (args.kind or "rrg-chain")
    file_values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
    def pick(name, default=None):
        flag_val = getattr(args, name, None)
        if flag_val is not None:
            return flag_val
        if name in file_values and file_values[name] is not None:
            return file_values[name]
        return default

    params = {}
    for key in _PARAM_KEYS.get(kind, []):
        val = pick(key)
        if val is not None:
            params[key] = val
    if kind == "urn":
        for key in ("S0", "Z0"):
            if key in params:
                params[key] = int(params[key])
    return ExperimentConfig(
        kind=kind,
        params=params,
        trials=int(pick("trials", 100)),
        seed=pick("seed"),
        workers=int(pick("workers", os.cpu_count() or 1)),
        out=pick("out"),
        fmt=pick("fmt", "csv"),
    )


def run(config: ExperimentConfig) -> int:
    """Execute a validated config; returns an exit code."""
    violations = validate(config)
    if violations:
        for line in violations:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    if config.kind == "predict":
        payload = _run_predict(config)
        text = json.dumps(payload, indent=1) + "\n"
        if config.out:
            Path(config.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if config.kind == "estimate-exponent":
        payload = _run_estimate_exponent(config)
        text = json.dumps(payload, indent=1) + "\n"
        if config.out:
            Path(config.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if config.kind == "sweep":
        payload = _run_sweep(config)
        sys.stdout.write(json.dumps(payload, indent=1) + "\n")
        return EXIT_OK

    runners = {
        "rrg-chain": _run_rrg_chain,
        "rrg-graph": _run_rrg_graph,
        "torus": _run_torus,
        "urn": _run_urn,
        "diag-urn": _run_diag_urn,
    }
    header, rows, extra = runners[config.kind](config)
    if config.out:
        with open(config.out, "w") as fh:
            _write_records(fh, header, rows, config.fmt)
        summary = stats.summarize_trials(rows)
        summary.update(extra)
        with open(_summary_path(config.out), "w") as fh:
            json.dump(summary, fh, indent=1)
            fh.write("\n")
    else:
        _write_records(sys.stdout, header, rows, config.fmt)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _build_config(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        violations = validate(config)
        payload = {"kind": config.kind, "violations": violations}
        sys.stdout.write(json.dumps(payload, indent=1) + "\n")
        return EXIT_OK
    try:
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
