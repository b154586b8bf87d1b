"""Sandwich greedy for joint server selection and cell assignment.

Two greedy runs pick server sets by maximizing the lower bound ``pi_l`` and
the upper bound ``pi_u``. After every pick the assignment is repaired by
:func:`assign_augment`, which moves cells onto the new server one at a time
while the mean-field objective ``omega_hat`` improves. The run whose final
deployment scores higher on ``omega_hat`` wins.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .greedy import greedy_max
from .instance import Instance
from .objective import Deployment, LowerBound, UpperBound, Weights, omega_hat, server_loads

log = logging.getLogger(__name__)


@dataclass
class SolverState:
    servers: list[int]
    assignment: np.ndarray  # int64, -1 while no server is deployed
    load: np.ndarray  # mean load per candidate, shape (M,)

    @classmethod
    def empty(cls, instance: Instance) -> "SolverState":
        return cls([], np.full(instance.n_cells, -1, dtype=np.int64), np.zeros(instance.n_candidates))

    def copy(self) -> "SolverState":
        return SolverState(list(self.servers), self.assignment.copy(), self.load.copy())

    def deployment(self) -> Deployment:
        return Deployment(tuple(self.servers), self.assignment.copy())


@dataclass
class SolveResult:
    deployment: Deployment
    objective: float
    branch: str
    traces: dict[str, Any] = field(default_factory=dict)


def _move_gains(instance: Instance, assignment, load, v, weights: Weights, cells=None, exact=True) -> np.ndarray:
    """Objective change from moving each of ``cells`` from its server onto ``v``."""
    if cells is None:
        cells = np.arange(instance.n_cells)
    mu = instance.mu[cells]
    u = assignment[cells]
    kv, wv = instance.kappa[v], load[v]
    # min(k_v, W_v + mu) - min(k_v, W_v), written so it is exactly mu when k_v does not bind
    gain_v = np.minimum(mu, max(kv - wv, 0.0))
    # min(k_u, W_u) - min(k_u, W_u - mu)
    loss_u = np.clip(instance.kappa[u] - load[u] + mu, 0.0, mu)
    delta_f = gain_v - loss_u
    if not exact:
        delta_f = delta_f + min(kv, wv)
    delta_g = instance.c[cells, v] - instance.c[cells, u]
    return weights.lambda1 * delta_f + weights.lambda2 * delta_g


def delta_gain(instance: Instance, state: SolverState, i: int, v: int, weights: Weights, exact: bool = True) -> float:
    """Change of ``omega_hat`` when cell ``i`` moves from its server to ``v``.

    ``exact=False`` drops the ``-min(kappa_v, W_v)`` term, reproducing the
    printed form of the gain, which overstates it once ``v`` carries load.
    """
    u = state.assignment[i]
    if u < 0:
        raise ValueError(f"cell {i} is not assigned yet")
    if u == v:
        raise ValueError(f"cell {i} is already on server {v}")
    return float(_move_gains(instance, state.assignment, state.load, v, weights, np.array([i]), exact)[0])


def assign_augment(
    instance: Instance,
    state: SolverState,
    v: int,
    weights: Weights,
    exact: bool = True,
    debug: bool = False,
) -> tuple[SolverState, list[int]]:
    """Add server ``v`` and greedily move cells onto it.

    Each round moves the unmoved cell with the largest gain (smallest index on
    ties) and stops at the first non-positive gain; a cell moves at most once.
    Returns the new state and the moved cells in move order.
    """
    if v in state.servers:
        raise ValueError(f"server {v} is already deployed")
    new = state.copy()
    new.servers.append(v)
    if not state.servers:
        new.assignment[:] = v
        new.load = server_loads(instance, new.assignment)
        return new, list(range(instance.n_cells))

    moved = np.zeros(instance.n_cells, dtype=bool)
    order: list[int] = []
    total = 0.0
    mu = instance.mu
    while len(order) < instance.n_cells:
        gains = _move_gains(instance, new.assignment, new.load, v, weights, exact=exact)
        gains[moved] = -np.inf
        i = int(np.argmax(gains))
        if not gains[i] > 0.0:
            break
        u = new.assignment[i]
        new.load[u] -= mu[i]
        new.load[v] += mu[i]
        new.assignment[i] = v
        moved[i] = True
        order.append(i)
        total += gains[i]
        if debug:
            _check_loads(instance, new)
    if not total > 0.0:
        kept = state.copy()
        kept.servers.append(v)
        return kept, []
    return new, order


def _check_loads(instance: Instance, state: SolverState) -> None:
    fresh = server_loads(instance, state.assignment)
    if not np.allclose(state.load, fresh, rtol=1e-9, atol=1e-9 * max(instance.total_mu, 1.0)):
        raise AssertionError("incremental loads drifted from recomputed loads")


def best_single_server(instance: Instance, servers, weights: Weights) -> tuple[int, np.ndarray]:
    """Best deployed server to host every cell, judged by ``omega_hat``."""
    servers = sorted(int(s) for s in servers)
    if not servers:
        raise ValueError("need at least one server")
    kappa = instance.kappa[servers]
    values = (weights.lambda1 * np.minimum(kappa, instance.total_mu)
              + weights.lambda2 * instance.c[:, servers].sum(axis=0))
    s = servers[int(np.argmax(values))]
    return s, np.full(instance.n_cells, s, dtype=np.int64)


def _run_branch(instance, k, weights, bound, exact, safeguard, lazy, debug):
    picked = greedy_max(bound, k, lazy=lazy)
    state = SolverState.empty(instance)
    moves = []
    for v in picked.picks:
        state, moved = assign_augment(instance, state, v, weights, exact=exact, debug=debug)
        moves.append(len(moved))
    dep = state.deployment()
    value = omega_hat(instance, dep, weights)
    used_safeguard = False
    if safeguard:
        _, alone = best_single_server(instance, dep.servers, weights)
        alt = Deployment(dep.servers, alone)
        alt_value = omega_hat(instance, alt, weights)
        if alt_value > value:
            dep, value, used_safeguard = alt, alt_value, True
    trace = {
        "picks": list(picked.picks),
        "gains": [float(g) for g in picked.gains],
        "moves": moves,
        "objective": value,
        "safeguard": used_safeguard,
    }
    return dep, value, trace


def solve(
    instance: Instance,
    k: int,
    weights: Weights,
    exact_gain: bool = True,
    safeguard: bool = True,
    lazy: bool = False,
    debug: bool = False,
) -> SolveResult:
    """Deploy ``k`` servers and assign every cell."""
    if not 1 <= k <= instance.n_candidates:
        raise ValueError(f"need 1 <= k <= M={instance.n_candidates}, got k={k}")
    lower = _run_branch(instance, k, weights, LowerBound(instance, weights), exact_gain, safeguard, lazy, debug)
    upper = _run_branch(instance, k, weights, UpperBound(instance, weights), exact_gain, safeguard, lazy, debug)
    traces = {"lower": lower[2], "upper": upper[2]}
    if lower[1] > upper[1]:
        return SolveResult(lower[0], lower[1], "lower", traces)
    return SolveResult(upper[0], upper[1], "upper", traces)
