"""Reference deployments: random, facility location, capacity-first knapsack."""

from __future__ import annotations

import numpy as np

from .greedy import greedy_max
from .instance import Instance
from .objective import Deployment, FacilityLocation


def _check_k(instance: Instance, k: int) -> None:
    if not 1 <= k <= instance.n_candidates:
        raise ValueError(f"need 1 <= k <= M={instance.n_candidates}, got k={k}")


def solve_rand(instance: Instance, k: int, seed: int) -> Deployment:
    """Uniform k-subset of candidates, each cell on a uniform member of it."""
    _check_k(instance, k)
    rng = np.random.default_rng(seed)
    servers = np.sort(rng.choice(instance.n_candidates, size=k, replace=False))
    assignment = servers[rng.integers(0, k, size=instance.n_cells)]
    return Deployment(tuple(int(s) for s in servers), assignment)


def nearest_assignment(instance: Instance, servers) -> np.ndarray:
    """Each cell on its highest-score server; ties go to the smaller server id."""
    ordered = np.array(sorted(servers), dtype=np.int64)
    return ordered[np.argmax(instance.c[:, ordered], axis=1)]


def solve_facility(instance: Instance, k: int) -> Deployment:
    _check_k(instance, k)
    picks = greedy_max(FacilityLocation(instance), k).picks
    return Deployment(tuple(picks), nearest_assignment(instance, picks))


def solve_knapsack(instance: Instance, k: int) -> Deployment:
    """Top-k mean capacities, then largest cells first onto the best-fitting server.

    A cell's fit on server s is the extra mean workload s would process,
    ``min(kappa_s, W_s + mu_i) - min(kappa_s, W_s)``. Every cell is placed,
    even when no server has room left.
    """
    _check_k(instance, k)
    order = np.lexsort((np.arange(instance.n_candidates), -instance.kappa))
    servers = np.sort(order[:k])
    kappa = instance.kappa[servers]
    load = np.zeros(k)
    assignment = np.empty(instance.n_cells, dtype=np.int64)
    cells = np.lexsort((np.arange(instance.n_cells), -instance.mu))
    for i in cells:
        m = instance.mu[i]
        fit = np.minimum(m, np.maximum(kappa - load, 0.0))
        j = int(np.argmax(fit))
        load[j] += m
        assignment[i] = servers[j]
    return Deployment(tuple(int(s) for s in servers), assignment)
