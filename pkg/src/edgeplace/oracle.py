"""Exhaustive ground truth for tiny instances and set-function property checks.

:class:`ExactObjectives` re-evaluates the bounds in exact rational arithmetic.
Every float input is a dyadic rational, so scaling all of them by one power of
two turns sums, mins and maxes into integer operations with no rounding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .greedy import SetFunction
from .instance import Instance
from .objective import Deployment, Weights, h_values

ENUMERATION_GUARD = 10**7
_CHUNK = 1 << 15


class GuardExceeded(ValueError):
    """The requested enumeration is larger than the guard."""


@dataclass
class OracleResult:
    best_deployment: Deployment
    best_value: float
    enumerated_count: int


def _assignment_block(n: int, k: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop`` of all base-k assignments, cell 0 most significant."""
    r = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(r), n), dtype=np.int64)
    for col in range(n - 1, -1, -1):
        out[:, col] = r % k
        r //= k
    return out


def _best_over_assignments(instance: Instance, servers: list[int], weights: Weights) -> tuple[np.ndarray, float]:
    n, k = instance.n_cells, len(servers)
    kappa = instance.kappa[servers]
    c_sel = instance.c[:, servers]
    rows = np.arange(n)
    best_val, best_pos = -math.inf, None
    total = k**n
    for start in range(0, total, _CHUNK):
        pos = _assignment_block(n, k, start, min(total, start + _CHUNK))
        f = np.zeros(len(pos))
        for j in range(k):
            f += np.minimum(kappa[j], (pos == j) @ instance.mu)
        g = c_sel[rows, pos].sum(axis=1)
        values = weights.lambda1 * f + weights.lambda2 * g
        r = int(np.argmax(values))
        if values[r] > best_val:
            best_val, best_pos = float(values[r]), pos[r].copy()
    return np.array(servers, dtype=np.int64)[best_pos], best_val


def brute_force_assignment(
    instance: Instance, servers: Sequence[int], weights: Weights, guard: int = ENUMERATION_GUARD
) -> tuple[np.ndarray, float]:
    """Best assignment of all cells onto ``servers`` under ``omega_hat``.

    Ties go to the lexicographically smallest assignment (servers ordered by id).
    """
    servers = sorted(int(s) for s in servers)
    if not servers:
        raise ValueError("need at least one server")
    count = len(servers) ** instance.n_cells
    if count > guard:
        raise GuardExceeded(f"{count} assignments exceed the guard of {guard}")
    return _best_over_assignments(instance, servers, weights)


def brute_force_deployment(
    instance: Instance, k: int, weights: Weights, guard: int = ENUMERATION_GUARD
) -> OracleResult:
    """Best (server set, assignment) pair over every k-subset."""
    m, n = instance.n_candidates, instance.n_cells
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= M={m}, got k={k}")
    count = math.comb(m, k) * k**n
    if count > guard:
        raise GuardExceeded(f"{count} deployments exceed the guard of {guard}")
    best = None
    for subset in itertools.combinations(range(m), k):
        assignment, value = _best_over_assignments(instance, list(subset), weights)
        if best is None or value > best[1]:
            best = (Deployment(subset, assignment), value)
    return OracleResult(best[0], best[1], count)


def exhaustive_inner_value(instance: Instance, servers: Sequence[int], weights: Weights) -> float:
    """``max_z omega_hat(S, z)`` where z may leave servers of S unused."""
    return brute_force_assignment(instance, servers, weights)[1]


def best_move_subset(
    instance: Instance, assignment: np.ndarray, v: int, weights: Weights
) -> float:
    """Best ``omega_hat`` reachable by moving any subset of cells onto ``v``.

    Every move sequence of the augmenting step ends in one of these states, so
    this bounds what a single pass of moves can achieve.
    """
    n = instance.n_cells
    if 2**n > ENUMERATION_GUARD:
        raise GuardExceeded(f"2^{n} move subsets exceed the guard")
    base = np.asarray(assignment, dtype=np.int64)
    servers = sorted(set(base.tolist()) | {v})
    best = -math.inf
    for mask in range(2**n):
        z = base.copy()
        for i in range(n):
            if mask >> i & 1:
                z[i] = v
        best = max(best, _omega(instance, servers, z, weights))
    return best


def _omega(instance: Instance, servers, z, weights: Weights) -> float:
    loads = np.bincount(z, weights=instance.mu, minlength=instance.n_candidates)
    f = float(np.minimum(instance.kappa[servers], loads[servers]).sum())
    g = float(instance.c[np.arange(instance.n_cells), z].sum())
    return weights.lambda1 * f + weights.lambda2 * g


# -- exact arithmetic ----------------------------------------------------------


def _dyadic_exponent(values) -> int:
    exp = 0
    for x in values:
        den = float(x).as_integer_ratio()[1]
        exp = max(exp, den.bit_length() - 1)
    return exp


class ExactObjectives:
    """Bounds and objectives of an instance evaluated without rounding."""

    def __init__(self, instance: Instance, weights: Weights | None = None):
        self.instance = instance
        flat = [*instance.mu, *instance.kappa, *instance.c.ravel()]
        self.exp = _dyadic_exponent(flat)
        self.den = 1 << self.exp
        scale = Fraction(self.den)
        to_int = lambda x: int(Fraction(float(x)) * scale)  # noqa: E731
        self.mu = [to_int(x) for x in instance.mu]
        self.kappa = [to_int(x) for x in instance.kappa]
        self.c = np.array([[to_int(x) for x in row] for row in instance.c], dtype=object)
        self.total_mu = sum(self.mu)
        self.weights = weights
        if weights is not None:
            self.l1 = Fraction(weights.lambda1)
            self.l2 = Fraction(weights.lambda2)
            self.h = [Fraction(float(x)) for x in h_values(instance, weights)]

    def _frac(self, scaled: int) -> Fraction:
        return Fraction(scaled, self.den)

    def f_u(self, servers) -> Fraction:
        if len(servers) == 0:
            return Fraction(0)
        return self._frac(min(self.total_mu, sum(self.kappa[s] for s in servers)))

    def g_u(self, servers) -> Fraction:
        if len(servers) == 0:
            return Fraction(0)
        return self._frac(int(self.c[:, list(servers)].max(axis=1).sum()))

    def pi_u(self, servers) -> Fraction:
        if len(servers) == 0:
            return Fraction(0)
        return self.l1 * self.f_u(servers) + self.l2 * self.g_u(servers)

    def pi_l(self, servers) -> Fraction:
        if len(servers) == 0:
            return Fraction(0)
        return max(self.h[s] for s in servers)

    def f_hat(self, dep: Deployment) -> Fraction:
        loads: dict[int, int] = {s: 0 for s in dep.servers}
        for i, s in enumerate(dep.assignment.tolist()):
            loads[s] += self.mu[i]
        return self._frac(sum(min(self.kappa[s], load) for s, load in loads.items()))

    def g_val(self, dep: Deployment) -> Fraction:
        return self._frac(sum(self.c[i, s] for i, s in enumerate(dep.assignment.tolist())))

    def evaluator(self, name: str) -> SetFunction:
        """Set-function view of one bound, memoized on the (unordered) server set."""
        from .greedy import FunctionOf

        func = getattr(self, name)
        memo: dict[frozenset, Fraction] = {}

        def cached(servers):
            key = frozenset(servers)
            if key not in memo:
                memo[key] = func(sorted(key))
            return memo[key]

        return FunctionOf(cached, self.instance.n_candidates)


# -- property checks ------------------------------------------------------------


@dataclass
class PropertyReport:
    trials: int
    violations: int = 0
    worst_gap: Any = 0
    witnesses: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def check_submodular(evaluator: SetFunction, M: int | None = None, trials: int = 1000, seed: int = 0,
                     tol: float = 0.0, max_witnesses: int = 5) -> PropertyReport:
    """Sample ``(S, v1, v2)`` and test ``f(S+v2)-f(S) >= f(S+v1+v2)-f(S+v1)``.

    ``worst_gap`` is the largest observed ``rhs - lhs``; positive means violated.
    """
    m = evaluator.ground_size if M is None else M
    if m < 2:
        raise ValueError("need a ground set of at least two elements")
    rng = np.random.default_rng(seed)
    report = PropertyReport(trials, worst_gap=None)
    for _ in range(trials):
        perm = rng.permutation(m).tolist()
        size = int(rng.integers(0, m - 1))
        S, v1, v2 = perm[:size], perm[size], perm[size + 1]
        f = evaluator.value
        fs, f1 = f(S), f([*S, v1])
        gap = (f([*S, v1, v2]) - f1) - (f([*S, v2]) - fs)
        if report.worst_gap is None or gap > report.worst_gap:
            report.worst_gap = gap
        if gap > tol:
            report.violations += 1
            if len(report.witnesses) < max_witnesses:
                report.witnesses.append((sorted(S), v1, v2, gap))
    return report


def check_monotone(evaluator: SetFunction, M: int | None = None, trials: int = 1000, seed: int = 0,
                   tol: float = 0.0, max_witnesses: int = 5) -> PropertyReport:
    """Sample ``(S, v)`` and test ``f(S) <= f(S+v)``."""
    m = evaluator.ground_size if M is None else M
    rng = np.random.default_rng(seed)
    report = PropertyReport(trials, worst_gap=None)
    for _ in range(trials):
        perm = rng.permutation(m).tolist()
        size = int(rng.integers(0, m))
        S, v = perm[:size], perm[size]
        gap = evaluator.value(S) - evaluator.value([*S, v])
        if report.worst_gap is None or gap > report.worst_gap:
            report.worst_gap = gap
        if gap > tol:
            report.violations += 1
            if len(report.witnesses) < max_witnesses:
                report.witnesses.append((sorted(S), v, gap))
    return report
