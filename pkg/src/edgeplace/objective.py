"""Objectives and their submodular bounds.

Notation used in the code:

* ``f_hat`` is the computing efficiency with workloads and capacities replaced
  by their means (the per-assignment upper bound on the expectation).
* ``f_l1`` subtracts ``sqrt(V[K_s - load_s] / 2)`` per server from ``f_hat``.
* ``f_u``, ``g_u`` and ``pi_u`` only depend on the server set.
* ``pi_l`` is the best all-cells-on-one-server value, ``max_s h(s)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .greedy import SetFunction
from .instance import Instance, InstanceError
from .stochastic import load_samples, nu_all, slack_variances

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Weights:
    lambda1: float

    def __post_init__(self):
        if not 0.0 <= self.lambda1 <= 1.0:
            raise ValueError(f"lambda1 must lie in [0, 1], got {self.lambda1!r}")

    @property
    def lambda2(self) -> float:
        return 1.0 - self.lambda1

    @classmethod
    def adjusted(cls, lam: float, a: float, b: float) -> "Weights":
        """Weights equivalent (up to scale) to ``lam/a * f + (1-lam)/b * g``."""
        wf, wg = lam / a, (1.0 - lam) / b
        return cls(wf / (wf + wg))


Assignment = np.ndarray  # server_of[i] is the server id of cell i


@dataclass(frozen=True, eq=False)
class Deployment:
    servers: tuple[int, ...]
    assignment: Assignment

    def __post_init__(self):
        servers = tuple(int(s) for s in self.servers)
        if len(set(servers)) != len(servers):
            raise InstanceError(f"duplicate servers in deployment: {servers}")
        arr = np.array(self.assignment, dtype=np.int64).reshape(-1)
        if len(servers) == 0:
            raise InstanceError("deployment needs at least one server")
        bad = np.flatnonzero(~np.isin(arr, servers))
        if len(bad):
            raise InstanceError(f"assignment[{bad[0]}] = {arr[bad[0]]} is not a deployed server")
        arr.setflags(write=False)
        object.__setattr__(self, "servers", servers)
        object.__setattr__(self, "assignment", arr)

    @property
    def k(self) -> int:
        return len(self.servers)

    def check_against(self, instance: Instance) -> None:
        if len(self.assignment) != instance.n_cells:
            raise InstanceError(f"assignment covers {len(self.assignment)} cells, instance has {instance.n_cells}")
        bad = [s for s in self.servers if not 0 <= s < instance.n_candidates]
        if bad:
            raise InstanceError(f"server {bad[0]} is not a candidate of the instance")

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Deployment)
            and self.servers == other.servers
            and np.array_equal(self.assignment, other.assignment)
        )

    __hash__ = None  # type: ignore[assignment]

    def to_dict(self) -> dict:
        return {"servers": list(self.servers), "assignment": self.assignment.tolist()}

    @classmethod
    def from_dict(cls, doc) -> "Deployment":
        if not isinstance(doc, dict) or "servers" not in doc or "assignment" not in doc:
            raise InstanceError("deployment document needs 'servers' and 'assignment'")
        for key in ("servers", "assignment"):
            if not isinstance(doc[key], list) or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in doc[key]
            ):
                raise InstanceError(f"deployment '{key}' must be a list of integers")
        return cls(tuple(doc["servers"]), np.array(doc["assignment"], dtype=np.int64))


def save_deployment(dep: Deployment, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dep.to_dict()), encoding="utf-8")


def load_deployment(path: str | Path) -> Deployment:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error in {path}: {exc}") from exc
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    return Deployment.from_dict(doc)


# -- per-deployment objectives ------------------------------------------------


def server_loads(instance: Instance, server_of: np.ndarray) -> np.ndarray:
    """Mean load on every candidate, shape (M,)."""
    return np.bincount(server_of, weights=instance.mu, minlength=instance.n_candidates)


def f_hat(instance: Instance, dep: Deployment) -> float:
    loads = server_loads(instance, dep.assignment)
    s = list(dep.servers)
    return float(np.minimum(instance.kappa[s], loads[s]).sum())


f_u1 = f_hat


def g_val(instance: Instance, dep: Deployment) -> float:
    return float(instance.c[np.arange(instance.n_cells), dep.assignment].sum())


def omega_hat(instance: Instance, dep: Deployment, weights: Weights) -> float:
    return weights.lambda1 * f_hat(instance, dep) + weights.lambda2 * g_val(instance, dep)


def f_l1(instance: Instance, dep: Deployment) -> float:
    var = slack_variances(instance, dep.servers, dep.assignment)
    return f_hat(instance, dep) - float(np.sqrt(var / 2.0).sum())


def realized_f(instance: Instance, dep: Deployment, w: np.ndarray, kcap: np.ndarray) -> float:
    loads = np.bincount(dep.assignment, weights=w, minlength=instance.n_candidates)
    s = list(dep.servers)
    return float(np.minimum(kcap[s], loads[s]).sum())


def realized_f_series(instance: Instance, dep: Deployment, w_periods: np.ndarray, k_periods: np.ndarray) -> np.ndarray:
    """Realized computing efficiency for every period column, shape (T,)."""
    loads = load_samples(w_periods, dep.assignment, dep.servers)
    return np.minimum(k_periods[list(dep.servers)], loads).sum(axis=0)


def realized_omega(instance: Instance, dep: Deployment, realization, weights: Weights) -> float:
    return (weights.lambda1 * realized_f(instance, dep, realization.w, realization.kcap)
            + weights.lambda2 * g_val(instance, dep))


# -- set-only bounds --------------------------------------------------------


def f_u(instance: Instance, servers: Sequence[int]) -> float:
    if len(servers) == 0:
        return 0.0
    return float(min(instance.total_mu, instance.kappa[list(servers)].sum()))


def g_u(instance: Instance, servers: Sequence[int]) -> float:
    if len(servers) == 0:
        return 0.0
    return float(instance.c[:, list(servers)].max(axis=1).sum())


def pi_u(instance: Instance, servers: Sequence[int], weights: Weights) -> float:
    if len(servers) == 0:
        return 0.0
    return weights.lambda1 * f_u(instance, servers) + weights.lambda2 * g_u(instance, servers)


def h_values(instance: Instance, weights: Weights) -> np.ndarray:
    """Value bound of putting every cell on candidate s, for all s. May be negative."""
    first = np.minimum(instance.kappa, instance.total_mu) - nu_all(instance) / SQRT2
    return weights.lambda1 * first + weights.lambda2 * instance.c.sum(axis=0)


def pi_l(instance: Instance, servers: Sequence[int], weights: Weights, h: np.ndarray | None = None) -> float:
    if len(servers) == 0:
        return 0.0
    h = h_values(instance, weights) if h is None else h
    return float(h[list(servers)].max())


# -- evaluators for the greedy engine ---------------------------------------


class FacilityLocation(SetFunction):
    """``g_u``: each cell counts its best score among the chosen servers."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.ground_size = instance.n_candidates
        self._cT = np.ascontiguousarray(instance.c.T)

    def _best(self, selected):
        if len(selected) == 0:
            return np.zeros(self.instance.n_cells)
        return self._cT[list(selected)].max(axis=0)

    def value(self, selected):
        return g_u(self.instance, selected)

    def gains(self, selected, candidates):
        best = self._best(selected)
        base = float(best.sum()) if len(selected) else 0.0
        after = np.maximum(self._cT[list(candidates)], best[None, :]).sum(axis=1)
        return after - base


class CapacityBound(SetFunction):
    """``f_u``: mean capacity of the chosen servers, capped at total demand."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.ground_size = instance.n_candidates

    def value(self, selected):
        return f_u(self.instance, selected)

    def gains(self, selected, candidates):
        inst = self.instance
        base = f_u(inst, selected)
        cap = float(inst.kappa[list(selected)].sum()) if len(selected) else 0.0
        after = np.minimum(inst.total_mu, cap + inst.kappa[list(candidates)])
        return after - base


class UpperBound(SetFunction):
    """``pi_u = lambda1 * f_u + lambda2 * g_u``."""

    def __init__(self, instance: Instance, weights: Weights):
        self.instance = instance
        self.weights = weights
        self.ground_size = instance.n_candidates
        self._f = CapacityBound(instance)
        self._g = FacilityLocation(instance)

    def value(self, selected):
        return pi_u(self.instance, selected, self.weights)

    def gains(self, selected, candidates):
        base = self.value(selected)
        inst, w = self.instance, self.weights
        cap = float(inst.kappa[list(selected)].sum()) if len(selected) else 0.0
        f_after = np.minimum(inst.total_mu, cap + inst.kappa[list(candidates)])
        best = self._g._best(selected)
        g_after = np.maximum(self._g._cT[list(candidates)], best[None, :]).sum(axis=1)
        return (w.lambda1 * f_after + w.lambda2 * g_after) - base


class LowerBound(SetFunction):
    """``pi_l = max_{s in S} h(s)``; ties are broken by ``h`` itself.

    After the first pick most marginal gains are exactly zero, so the
    ``h``-valued tie key makes the greedy pick the candidates with largest h.
    """

    def __init__(self, instance: Instance, weights: Weights):
        self.instance = instance
        self.weights = weights
        self.ground_size = instance.n_candidates
        self.h = h_values(instance, weights)

    def value(self, selected):
        return pi_l(self.instance, selected, self.weights, self.h)

    def gains(self, selected, candidates):
        base = self.value(selected)
        hv = self.h[list(candidates)]
        if len(selected) == 0:
            return hv - base
        return np.maximum(hv, base) - base

    def tie_key(self, v):
        return float(self.h[v])
