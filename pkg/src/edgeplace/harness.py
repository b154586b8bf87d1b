"""Back-testing deployments on per-period realizations and running sweeps.

Computing and communication efficiency have different units, so reported
scores are normalized by the averages ``a`` (computing) and ``b``
(communication) of random deployments:

    adjusted = lam / a * mean_f + (1 - lam) / b * g
"""

from __future__ import annotations

import csv
import io
import json
import logging
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__
from .baselines import solve_facility, solve_knapsack, solve_rand
from .instance import GenConfig, Instance, InstanceError, generate_synthetic
from .objective import Deployment, Weights, g_val, realized_f_series
from .solver import solve
from .stochastic import period_matrices

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ALGORITHMS = ("SDU", "RAND", "FACILITY", "KNAPSACK")
BASELINES = ("RAND", "FACILITY", "KNAPSACK")
IMPROVEMENT = "IMPROVEMENT"
CSV_COLUMNS = (
    "schema_version", "scenario", "n_cells", "n_candidates", "n_periods", "k", "lambda",
    "kappa", "gamma", "seed", "algo", "mean_f", "mean_g", "norm_a", "norm_b",
    "adjusted_pi", "improvement_pct", "reference_algo", "error",
)


@dataclass(frozen=True)
class NormConstants:
    a: float
    b: float
    n_random: int


@dataclass
class BacktestRow:
    algo: str
    mean_f: float
    mean_g: float
    adjusted_pi: float
    series_f: list[float] | None = None


@dataclass
class BacktestReport:
    rows: list[BacktestRow]
    norm: NormConstants
    params: dict[str, Any] = field(default_factory=dict)

    def row(self, algo: str) -> BacktestRow:
        for r in self.rows:
            if r.algo == algo:
                return r
        raise KeyError(algo)


def adjusted_pi(lam: float, mean_f: float, mean_g: float, a: float, b: float) -> float:
    return (lam / a) * mean_f + ((1.0 - lam) / b) * mean_g


def _periods(instance: Instance, n_periods: int, seed: int):
    return period_matrices(instance, n_periods=n_periods, seed=seed)


def normalize_constants(
    instance: Instance, k: int, n_random: int = 100, seed: int = 0, n_periods: int = 192
) -> NormConstants:
    """Average realized computing and communication efficiency of random deployments.

    Uses the stored periods when the instance has them, else ``n_periods``
    seeded draws.
    """
    if n_random < 1:
        raise ValueError("n_random must be >= 1")
    w, kcap = _periods(instance, n_periods, seed)
    f_sum = g_sum = 0.0
    for j in range(n_random):
        dep = solve_rand(instance, k, seed=[seed, 1, j])
        f_sum += float(realized_f_series(instance, dep, w, kcap).mean())
        g_sum += g_val(instance, dep)
    a, b = f_sum / n_random, g_sum / n_random
    if not (a > 0 and b > 0):
        log.warning("degenerate normalization constants a=%r b=%r", a, b)
    return NormConstants(a, b, n_random)


def backtest(
    instance: Instance,
    deployment: Deployment,
    lam: float,
    norm: NormConstants,
    algo: str = "deployment",
    n_periods: int = 192,
    seed: int = 0,
    keep_series: bool = False,
) -> BacktestRow:
    """Realized efficiency of a fixed deployment averaged over every period."""
    deployment.check_against(instance)
    w, kcap = _periods(instance, n_periods, seed)
    series = realized_f_series(instance, deployment, w, kcap)
    mean_f = float(series.mean())
    mean_g = g_val(instance, deployment)
    return BacktestRow(
        algo, mean_f, mean_g, adjusted_pi(lam, mean_f, mean_g, norm.a, norm.b),
        [float(x) for x in series] if keep_series else None,
    )


def report_to_dict(report: BacktestReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "norm": asdict(report.norm),
        "params": report.params,
        "rows": [asdict(r) for r in report.rows],
    }


def report_from_dict(doc: dict) -> BacktestReport:
    try:
        return BacktestReport(
            rows=[BacktestRow(**r) for r in doc["rows"]],
            norm=NormConstants(**doc["norm"]),
            params=dict(doc.get("params", {})),
        )
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed backtest report: {exc}") from exc


def save_report(report: BacktestReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=1), encoding="utf-8")


def load_report(path: str | Path) -> BacktestReport:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error in {path}: {exc}") from exc
    return report_from_dict(doc)


# -- sweeps ---------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    k: tuple[int, ...] = (10, 20, 30)
    lambdas: tuple[float, ...] = (0.2, 0.5, 0.8)
    kappas: tuple[float, ...] = (0.7, 1.3)
    gammas: tuple[float, ...] = (0.1, 0.9)
    seeds: tuple[int, ...] = (0,)
    n_random: int = 100
    workers: int = 1
    generator: GenConfig = GenConfig()

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        doc = dict(doc)
        gen_fields = {f for f in GenConfig.__dataclass_fields__}
        gen = {key: doc.pop(key) for key in list(doc) if key in gen_fields}
        gen.update(doc.pop("generator", {}) or {})
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise InstanceError(f"unknown sweep config keys: {sorted(unknown)}")
        kwargs = {key: tuple(v) if isinstance(v, list) else v for key, v in doc.items()}
        try:
            return cls(generator=GenConfig(**gen), **kwargs)
        except TypeError as exc:
            raise InstanceError(f"bad sweep config: {exc}") from exc

    def to_dict(self) -> dict:
        out = asdict(self)
        out["generator"] = asdict(self.generator)
        return out


def load_sweep_config(path: str | Path) -> SweepConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error in {path}: {exc}") from exc
    return SweepConfig.from_dict(doc)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _instance_jobs(config: SweepConfig) -> list[tuple[float, float, int, int]]:
    return [
        (kappa, gamma, k, seed)
        for kappa in config.kappas
        for gamma in config.gammas
        for k in config.k
        for seed in config.seeds
    ]


def _run_instance_job(args) -> tuple[list[dict], float]:
    config, (kappa, gamma, k, seed), first_id = args
    t0 = time.perf_counter()
    base = {"schema_version": SCHEMA_VERSION, "k": k, "kappa": kappa, "gamma": gamma, "seed": seed}
    rows: list[dict] = []
    try:
        gen = replace(config.generator, kappa_factor=kappa, gamma_factor=gamma, k_planned=k)
        instance = generate_synthetic(gen, seed)
        base.update(n_cells=instance.n_cells, n_candidates=instance.n_candidates, n_periods=instance.n_periods)
        norm = normalize_constants(instance, k, config.n_random, seed=seed, n_periods=gen.n_periods)
        fixed = {
            "RAND": solve_rand(instance, k, seed),
            "FACILITY": solve_facility(instance, k),
            "KNAPSACK": solve_knapsack(instance, k),
        }
    except Exception as exc:  # noqa: BLE001 - recorded per scenario
        log.exception("scenario setup failed")
        for j, lam in enumerate(config.lambdas):
            rows.append({**base, "scenario": first_id + j, "lambda": lam, "algo": "", "error": repr(exc)})
        return rows, time.perf_counter() - t0

    for j, lam in enumerate(config.lambdas):
        scen = {**base, "scenario": first_id + j, "lambda": lam, "norm_a": norm.a, "norm_b": norm.b}
        try:
            deps = {"SDU": solve(instance, k, Weights.adjusted(lam, norm.a, norm.b)).deployment, **fixed}
            results = {algo: backtest(instance, deps[algo], lam, norm, algo) for algo in ALGORITHMS}
        except Exception as exc:  # noqa: BLE001
            log.exception("scenario failed")
            rows.append({**scen, "algo": "", "error": repr(exc)})
            continue
        for algo in ALGORITHMS:
            r = results[algo]
            rows.append({**scen, "algo": algo, "mean_f": r.mean_f, "mean_g": r.mean_g, "adjusted_pi": r.adjusted_pi})
        ref = max(BASELINES, key=lambda a: (results[a].adjusted_pi, -BASELINES.index(a)))
        ref_pi = results[ref].adjusted_pi
        rows.append({
            **scen, "algo": IMPROVEMENT, "reference_algo": ref,
            "improvement_pct": (results["SDU"].adjusted_pi - ref_pi) / ref_pi * 100.0,
        })
    return rows, time.perf_counter() - t0


@dataclass
class SweepOutcome:
    rows: list[dict]
    csv_path: Path
    meta_path: Path


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def read_sweep_csv(path: str | Path) -> list[dict]:
    """Parse a sweep CSV back into typed rows (blank fields become None)."""
    ints = {"schema_version", "scenario", "n_cells", "n_candidates", "n_periods", "k", "seed"}
    floats = {"lambda", "kappa", "gamma", "mean_f", "mean_g", "norm_a", "norm_b", "adjusted_pi", "improvement_pct"}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            row: dict[str, Any] = {}
            for key, value in raw.items():
                if value == "":
                    row[key] = None
                elif key in ints:
                    row[key] = int(value)
                elif key in floats:
                    row[key] = float(value)
                else:
                    row[key] = value
            out.append(row)
    return out


def run_sweep(config: SweepConfig, out_dir: str | Path, workers: int | None = None) -> SweepOutcome:
    """Run every scenario, write ``sweep.csv`` and ``sweep.meta.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = _instance_jobs(config)
    n_lam = len(config.lambdas)
    payload = [(config, job, idx * n_lam) for idx, job in enumerate(jobs)]
    workers = config.workers if workers is None else workers
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_instance_job, payload))
    else:
        results = [_run_instance_job(p) for p in payload]
    rows = [row for job_rows, _ in results for row in job_rows]

    csv_path = out_dir / "sweep.csv"
    csv_path.write_text(rows_to_csv(rows), encoding="utf-8")
    meta = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "config": config.to_dict(),
        "seeds": list(config.seeds),
        "timings": {
            "total_seconds": time.perf_counter() - t0,
            "instances": [
                {"kappa": j[0], "gamma": j[1], "k": j[2], "seed": j[3], "seconds": secs}
                for j, (_, secs) in zip(jobs, results)
            ],
        },
        "errors": sum(1 for r in rows if r.get("error")),
    }
    meta_path = out_dir / "sweep.meta.json"
    meta_path.write_text(json.dumps(meta, indent=1), encoding="utf-8")
    return SweepOutcome(rows, csv_path, meta_path)


# -- summaries ------------------------------------------------------------------


def _by_scenario(rows: Iterable[dict]) -> dict[int, dict[str, dict]]:
    out: dict[int, dict[str, dict]] = {}
    for row in rows:
        if row.get("algo") in ALGORITHMS and not row.get("error"):
            out.setdefault(row["scenario"], {})[row["algo"]] = row
    return out


def dominance_rate(rows: Iterable[dict], slack: float = 0.02) -> tuple[int, int]:
    """Scenarios where SDU is best or within ``slack`` of the best, and the total."""
    hits = total = 0
    for algos in _by_scenario(rows).values():
        if len(algos) != len(ALGORITHMS):
            continue
        best = max(r["adjusted_pi"] for r in algos.values())
        total += 1
        if algos["SDU"]["adjusted_pi"] >= (1.0 - slack) * best:
            hits += 1
    return hits, total


def standing(algos: dict[str, dict], algo: str) -> int:
    """How many other algorithms ``algo`` strictly beats on adjusted score."""
    mine = algos[algo]["adjusted_pi"]
    return sum(1 for name, r in algos.items() if name != algo and mine > r["adjusted_pi"])


def lambda_trends(rows: Iterable[dict]) -> dict[str, tuple[int, int]]:
    """Fraction of fixed (k, kappa, gamma, seed) groups with the expected lambda trend.

    KNAPSACK's standing should not fall as lambda grows and FACILITY's should
    not rise. Returns ``{algo: (groups_holding, groups)}``.
    """
    groups: dict[tuple, list[tuple[float, dict]]] = {}
    for algos in _by_scenario(rows).values():
        if len(algos) != len(ALGORITHMS):
            continue
        r = algos["SDU"]
        groups.setdefault((r["k"], r["kappa"], r["gamma"], r["seed"]), []).append((r["lambda"], algos))
    out = {"KNAPSACK": [0, 0], "FACILITY": [0, 0]}
    for items in groups.values():
        items.sort(key=lambda t: t[0])
        for algo, sign in (("KNAPSACK", 1), ("FACILITY", -1)):
            ranks = [standing(algos, algo) for _, algos in items]
            ok = all(sign * (b - a) >= 0 for a, b in zip(ranks, ranks[1:]))
            out[algo][0] += int(ok)
            out[algo][1] += 1
    return {k: (v[0], v[1]) for k, v in out.items()}
