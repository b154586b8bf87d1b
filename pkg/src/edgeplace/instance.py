"""Problem data: cells, candidate servers, communication costs.

An :class:`Instance` is immutable once built. Numeric data lives in read-only
numpy arrays (``mu``, ``sigma``, ``kappa``, ``gamma``, ``d``, ``c`` and the
optional per-period sample matrices); the record views ``cells`` and
``candidates`` are built on demand for serialization and inspection.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import stats

SAMPLE_RTOL = 1e-9


class InstanceError(ValueError):
    """Raised for unparsable files, schema violations and broken invariants."""


@dataclass(frozen=True)
class Cell:
    id: int
    x: float
    y: float
    mu: float
    sigma: float
    samples: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Candidate:
    id: int
    x: float
    y: float
    kappa: float
    gamma: float
    samples: tuple[float, ...] | None = None


@dataclass(frozen=True, eq=False)
class CostMatrix:
    d: np.ndarray

    @property
    def c(self) -> np.ndarray:
        return 1.0 - self.d

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CostMatrix) and np.array_equal(self.d, other.d)


def _frozen(a: Any, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _close(actual: float, expected: float, scale: float) -> bool:
    return abs(actual - expected) <= SAMPLE_RTOL * max(abs(actual), abs(expected), abs(scale), 1e-300)


def compute_costs(cell_xy: np.ndarray, cand_xy: np.ndarray) -> CostMatrix:
    """Euclidean cell-to-candidate distances scaled so the largest is 1."""
    cell_xy = np.asarray(cell_xy, dtype=float).reshape(-1, 2)
    cand_xy = np.asarray(cand_xy, dtype=float).reshape(-1, 2)
    if len(cell_xy) == 0 or len(cand_xy) == 0:
        raise InstanceError("need at least one cell and one candidate to compute costs")
    dist = np.hypot(
        cell_xy[:, None, 0] - cand_xy[None, :, 0],
        cell_xy[:, None, 1] - cand_xy[None, :, 1],
    )
    top = dist.max()
    if top <= 0.0:
        raise InstanceError(
            "all cell/candidate positions coincide; provide an explicit cost matrix 'costs.d'"
        )
    return CostMatrix(_frozen(dist / top))


class Instance:
    """Cells with stochastic workloads, candidates with stochastic capacities.

    Parameters
    ----------
    mu, sigma : (N,) arrays
        Mean and standard deviation of each cell's per-period workload.
    kappa, gamma : (M,) arrays
        Mean and standard deviation of each candidate's per-period capacity.
    d : (N, M) array, optional
        Communication cost in [0, 1]. Computed from coordinates when omitted.
    cell_xy, cand_xy : (N, 2) and (M, 2) arrays, optional
        Planar coordinates. Default to the origin.
    workload_samples : (N, T) array, optional
    capacity_samples : (M, T) array, optional
        Historical observations. Columns are periods; when both are present
        they must share T and column t of each is the same period.
    """

    def __init__(
        self,
        mu: Sequence[float],
        sigma: Sequence[float],
        kappa: Sequence[float],
        gamma: Sequence[float],
        d: np.ndarray | None = None,
        cell_xy: np.ndarray | None = None,
        cand_xy: np.ndarray | None = None,
        workload_samples: np.ndarray | None = None,
        capacity_samples: np.ndarray | None = None,
    ):
        self.mu = _frozen(mu).reshape(-1)
        self.sigma = _frozen(sigma).reshape(-1)
        self.kappa = _frozen(kappa).reshape(-1)
        self.gamma = _frozen(gamma).reshape(-1)
        n, m = len(self.mu), len(self.kappa)
        if n < 1 or m < 1:
            raise InstanceError("an instance needs at least one cell and one candidate")
        if len(self.sigma) != n:
            raise InstanceError(f"sigma has length {len(self.sigma)}, expected {n}")
        if len(self.gamma) != m:
            raise InstanceError(f"gamma has length {len(self.gamma)}, expected {m}")
        for name, arr in (("mu", self.mu), ("sigma", self.sigma), ("kappa", self.kappa), ("gamma", self.gamma)):
            bad = np.flatnonzero(~np.isfinite(arr) | (arr < 0))
            if len(bad):
                raise InstanceError(f"{name}[{bad[0]}] must be a finite number >= 0, got {arr[bad[0]]!r}")

        self.cell_xy = _frozen(np.zeros((n, 2)) if cell_xy is None else cell_xy).reshape(n, 2)
        self.cand_xy = _frozen(np.zeros((m, 2)) if cand_xy is None else cand_xy).reshape(m, 2)

        self.explicit_costs = d is not None
        if d is None:
            costs = compute_costs(self.cell_xy, self.cand_xy)
        else:
            d = np.asarray(d, dtype=float)
            if d.shape != (n, m):
                raise InstanceError(f"costs.d has shape {d.shape}, expected {(n, m)}")
            bad = np.argwhere(~np.isfinite(d) | (d < 0.0) | (d > 1.0))
            if len(bad):
                i, s = bad[0]
                raise InstanceError(f"d[{i}][{s}] = {d[i, s]!r} is outside [0, 1]")
            costs = CostMatrix(_frozen(d))
        self.costs = costs
        self.d = costs.d
        self.c = _frozen(1.0 - self.d)

        self.workload_samples = self._check_samples(workload_samples, self.mu, self.sigma, "cells")
        self.capacity_samples = self._check_samples(capacity_samples, self.kappa, self.gamma, "candidates")
        if (
            self.workload_samples is not None
            and self.capacity_samples is not None
            and self.workload_samples.shape[1] != self.capacity_samples.shape[1]
        ):
            raise InstanceError(
                "cell and candidate samples must cover the same number of periods "
                f"({self.workload_samples.shape[1]} vs {self.capacity_samples.shape[1]})"
            )
        self.total_mu = float(self.mu.sum())

    @staticmethod
    def _check_samples(samples, mean, std, what: str) -> np.ndarray | None:
        if samples is None:
            return None
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != len(mean) or arr.shape[1] < 1:
            raise InstanceError(f"{what} samples must form a {len(mean)} x T matrix with T >= 1, got {arr.shape}")
        bad = np.argwhere(~np.isfinite(arr) | (arr < 0))
        if len(bad):
            raise InstanceError(f"{what}[{bad[0][0]}].samples[{bad[0][1]}] must be finite and >= 0")
        emp_mean = arr.mean(axis=1)
        emp_std = arr.std(axis=1)
        mean_field, std_field = ("mu", "sigma") if what == "cells" else ("kappa", "gamma")
        for j in range(len(mean)):
            if not _close(emp_mean[j], mean[j], mean[j]):
                raise InstanceError(
                    f"{what}[{j}].{mean_field} = {mean[j]!r} disagrees with its samples' mean {emp_mean[j]!r}"
                )
            if not _close(emp_std[j], std[j], mean[j]):
                raise InstanceError(
                    f"{what}[{j}].{std_field} = {std[j]!r} disagrees with its samples' std {emp_std[j]!r}"
                )
        return _frozen(arr)

    @classmethod
    def from_samples(
        cls,
        workload_samples: np.ndarray,
        capacity_samples: np.ndarray,
        d: np.ndarray | None = None,
        cell_xy: np.ndarray | None = None,
        cand_xy: np.ndarray | None = None,
    ) -> "Instance":
        """Build an instance whose moments are the empirical moments of the samples."""
        w = np.asarray(workload_samples, dtype=float)
        k = np.asarray(capacity_samples, dtype=float)
        return cls(
            w.mean(axis=1), w.std(axis=1), k.mean(axis=1), k.std(axis=1),
            d=d, cell_xy=cell_xy, cand_xy=cand_xy,
            workload_samples=w, capacity_samples=k,
        )

    @property
    def n_cells(self) -> int:
        return len(self.mu)

    @property
    def n_candidates(self) -> int:
        return len(self.kappa)

    @property
    def n_periods(self) -> int | None:
        """Number of stored paired periods, or None without paired samples."""
        if self.workload_samples is None or self.capacity_samples is None:
            return None
        return self.workload_samples.shape[1]

    @property
    def has_paired_samples(self) -> bool:
        return self.n_periods is not None

    @cached_property
    def cells(self) -> tuple[Cell, ...]:
        w = self.workload_samples
        return tuple(
            Cell(i, float(self.cell_xy[i, 0]), float(self.cell_xy[i, 1]), float(self.mu[i]), float(self.sigma[i]),
                 None if w is None else tuple(float(v) for v in w[i]))
            for i in range(self.n_cells)
        )

    @cached_property
    def candidates(self) -> tuple[Candidate, ...]:
        k = self.capacity_samples
        return tuple(
            Candidate(s, float(self.cand_xy[s, 0]), float(self.cand_xy[s, 1]), float(self.kappa[s]),
                      float(self.gamma[s]), None if k is None else tuple(float(v) for v in k[s]))
            for s in range(self.n_candidates)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(a, b)

        return all(
            same(getattr(self, name), getattr(other, name))
            for name in ("mu", "sigma", "kappa", "gamma", "d", "cell_xy", "cand_xy",
                         "workload_samples", "capacity_samples")
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Instance(N={self.n_cells}, M={self.n_candidates}, T={self.n_periods}, total_mu={self.total_mu:.6g})"


# -- serialization -----------------------------------------------------------


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceError(f"{where} must be a number, got {value!r}")
    return float(value)


def _records(doc: dict, key: str, mean_key: str, std_key: str):
    items = doc.get(key)
    if not isinstance(items, list) or not items:
        raise InstanceError(f"'{key}' must be a non-empty list")
    xy, mean, std, samples = [], [], [], []
    for j, rec in enumerate(items):
        where = f"{key}[{j}]"
        if not isinstance(rec, dict):
            raise InstanceError(f"{where} must be an object")
        for req in ("id", "x", "y", mean_key, std_key):
            if req not in rec:
                raise InstanceError(f"{where} is missing '{req}'")
        if rec["id"] != j:
            raise InstanceError(f"{where}.id must equal its position {j}, got {rec['id']!r}")
        xy.append((_number(rec["x"], f"{where}.x"), _number(rec["y"], f"{where}.y")))
        mean.append(_number(rec[mean_key], f"{where}.{mean_key}"))
        std.append(_number(rec[std_key], f"{where}.{std_key}"))
        raw = rec.get("samples")
        if raw is not None:
            if not isinstance(raw, list) or not raw:
                raise InstanceError(f"{where}.samples must be a non-empty list")
            samples.append([_number(v, f"{where}.samples[{t}]") for t, v in enumerate(raw)])
        else:
            samples.append(None)
    present = [s is not None for s in samples]
    if any(present) and not all(present):
        missing = present.index(False)
        raise InstanceError(f"{key}[{missing}] has no samples while other {key} do")
    if all(present):
        lengths = {len(s) for s in samples}
        if len(lengths) != 1:
            raise InstanceError(f"all {key} samples must have the same length, got {sorted(lengths)}")
        matrix = np.array(samples, dtype=float)
    else:
        matrix = None
    return np.array(xy, dtype=float), mean, std, matrix


def instance_from_dict(doc: Any) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    cell_xy, mu, sigma, w = _records(doc, "cells", "mu", "sigma")
    cand_xy, kappa, gamma, k = _records(doc, "candidates", "kappa", "gamma")
    d = None
    if doc.get("costs") is not None:
        costs = doc["costs"]
        if not isinstance(costs, dict) or not isinstance(costs.get("d"), list):
            raise InstanceError("'costs' must be an object with a 'd' matrix")
        rows = costs["d"]
        if len(rows) != len(mu):
            raise InstanceError(f"costs.d has {len(rows)} rows, expected {len(mu)}")
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != len(kappa):
                raise InstanceError(f"costs.d[{i}] must be a list of {len(kappa)} numbers")
            for s, v in enumerate(row):
                val = _number(v, f"d[{i}][{s}]")
                if not 0.0 <= val <= 1.0:
                    raise InstanceError(f"d[{i}][{s}] = {val!r} is outside [0, 1]")
        d = np.array(rows, dtype=float)
    return Instance(mu, sigma, kappa, gamma, d=d, cell_xy=cell_xy, cand_xy=cand_xy,
                    workload_samples=w, capacity_samples=k)


def instance_to_dict(instance: Instance) -> dict:
    cells = []
    for cell in instance.cells:
        rec = {"id": cell.id, "x": cell.x, "y": cell.y, "mu": cell.mu, "sigma": cell.sigma}
        if cell.samples is not None:
            rec["samples"] = list(cell.samples)
        cells.append(rec)
    cands = []
    for cand in instance.candidates:
        rec = {"id": cand.id, "x": cand.x, "y": cand.y, "kappa": cand.kappa, "gamma": cand.gamma}
        if cand.samples is not None:
            rec["samples"] = list(cand.samples)
        cands.append(rec)
    doc: dict = {"cells": cells, "candidates": cands}
    if instance.explicit_costs:
        doc["costs"] = {"d": instance.d.tolist()}
    return doc


def load_instance(path: str | Path) -> Instance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error in {path}: {exc}") from exc
    return instance_from_dict(doc)


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance)), encoding="utf-8")


# -- synthetic generator -----------------------------------------------------


@dataclass(frozen=True)
class GenConfig:
    """Parameters of the synthetic city.

    Cells fall uniformly in a ``width`` x ``height`` area. The grid splits the
    bounding square of that area into ``grid_side`` x ``grid_side`` regions and
    a candidate sits at the center of every region holding at least one cell.
    Per-server mean capacity is ``U(1, kappa_factor) * total_mu / k_planned``
    with standard deviation ``gamma_factor`` times the mean.
    """

    n_cells: int = 500
    grid_side: int = 7
    kappa_factor: float = 1.3
    gamma_factor: float = 0.1
    k_planned: int = 10
    n_periods: int = 192
    width: float = 50.0
    height: float = 60.0
    workload_median: float = 100.0
    workload_log_sigma: float = 1.5
    cv_light: float = 10.0
    cv_busy: float = 0.8

    def validate(self) -> None:
        for name in ("n_cells", "grid_side", "k_planned", "n_periods"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise InstanceError(f"GenConfig.{name} must be a positive integer, got {value!r}")
        for name in ("kappa_factor", "width", "height", "workload_median", "cv_light", "cv_busy"):
            if not getattr(self, name) > 0:
                raise InstanceError(f"GenConfig.{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("gamma_factor", "workload_log_sigma"):
            if not getattr(self, name) >= 0:
                raise InstanceError(f"GenConfig.{name} must be >= 0, got {getattr(self, name)!r}")


def _gamma_draws(rng: np.random.Generator, mean: np.ndarray, cv: np.ndarray, size: int) -> np.ndarray:
    shape = 1.0 / cv**2
    return rng.gamma(shape[:, None], (mean * cv**2)[:, None], size=(len(mean), size))


def generate_synthetic(config: GenConfig, seed: int) -> Instance:
    """Random instance shaped like an hourly city-scale cellular trace."""
    config.validate()
    rng = np.random.default_rng(seed)
    n, g, T = config.n_cells, config.grid_side, config.n_periods

    cell_xy = np.column_stack([rng.uniform(0.0, config.width, n), rng.uniform(0.0, config.height, n)])
    side = max(config.width, config.height)
    step = side / g
    region = np.minimum((cell_xy // step).astype(int), g - 1)
    occupied = np.unique(region[:, 1] * g + region[:, 0])
    if len(occupied) == 0:
        raise InstanceError("no region contains a cell")
    cand_xy = np.column_stack([(occupied % g + 0.5) * step, (occupied // g + 0.5) * step])

    target_mu = rng.lognormal(math.log(config.workload_median), config.workload_log_sigma, n)
    log_mu = np.log(target_mu)
    span = log_mu.max() - log_mu.min()
    t = (log_mu - log_mu.min()) / span if span > 0 else np.full(n, 0.5)
    cv = np.exp(math.log(config.cv_light) + t * (math.log(config.cv_busy) - math.log(config.cv_light)))
    w = _gamma_draws(rng, target_mu, cv, T)
    total_mu = float(w.mean(axis=1).sum())

    lo, hi = sorted((1.0, config.kappa_factor))
    m = len(occupied)
    target_kappa = rng.uniform(lo, hi, m) * total_mu / config.k_planned
    if config.gamma_factor > 0:
        scale = config.gamma_factor * target_kappa
        lower = -target_kappa / scale
        k = stats.truncnorm.rvs(
            lower[:, None], np.inf, loc=target_kappa[:, None], scale=scale[:, None],
            size=(m, T), random_state=rng,
        )
        k = np.maximum(k, 0.0)
    else:
        k = np.repeat(target_kappa[:, None], T, axis=1)

    return Instance.from_samples(w, k, cell_xy=cell_xy, cand_xy=cand_xy)
