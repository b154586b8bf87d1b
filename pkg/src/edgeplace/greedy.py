"""Cardinality-constrained greedy maximization of set functions.

Ties between candidates are broken by the larger marginal gain, then the
larger ``tie_key``, then the smaller candidate index, so results do not depend
on the order in which candidates are scanned.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


class SetFunction:
    """A set function over the ground set ``range(ground_size)``.

    Subclasses implement :meth:`value`; overriding :meth:`gains` with a
    vectorized version is optional. :meth:`tie_key` is a per-element secondary
    sort key used only to break exact gain ties.
    """

    ground_size: int

    def value(self, selected: Sequence[int]) -> Any:
        raise NotImplementedError

    def gains(self, selected: Sequence[int], candidates: Sequence[int]) -> Sequence[Any]:
        base = self.value(selected)
        return [self.value([*selected, v]) - base for v in candidates]

    def tie_key(self, v: int) -> Any:
        return 0


class ModularFunction(SetFunction):
    def __init__(self, weights):
        self.weights = list(weights)
        self.ground_size = len(self.weights)

    def value(self, selected):
        return sum(self.weights[v] for v in selected)


class CoverageFunction(SetFunction):
    """Number (or total weight) of elements covered by the chosen sets."""

    def __init__(self, sets: Sequence[set[int]], weights: dict[int, Any] | None = None):
        self.sets = [frozenset(s) for s in sets]
        self.ground_size = len(self.sets)
        self.weights = weights

    def value(self, selected):
        covered = frozenset().union(*(self.sets[v] for v in selected)) if selected else frozenset()
        if self.weights is None:
            return len(covered)
        return sum(self.weights[e] for e in covered)


class FunctionOf(SetFunction):
    """Wrap a plain callable ``f(list_of_indices)`` as a :class:`SetFunction`."""

    def __init__(self, func, ground_size: int):
        self.func = func
        self.ground_size = ground_size

    def value(self, selected):
        return self.func(list(selected))


@dataclass
class GreedyResult:
    picks: list[int]
    gains: list[Any] = field(default_factory=list)
    value: Any = None


def _better(gain, tie, v, best) -> bool:
    if best is None:
        return True
    bg, bt, bv = best
    if gain != bg:
        return gain > bg
    if tie != bt:
        return tie > bt
    return v < bv


def best_candidate(entries) -> tuple:
    """Reduce ``(gain, tie, index)`` triples to the winner of the tie-break rule.

    The winner does not depend on the order of ``entries``, so gains computed
    concurrently can be merged in whatever order they complete.
    """
    best = None
    for gain, tie, v in entries:
        if _better(gain, tie, v, best):
            best = (gain, tie, v)
    if best is None:
        raise ValueError("no candidates to choose from")
    return best


def greedy_max(fn: SetFunction, k: int, ground_size: int | None = None, lazy: bool = False) -> GreedyResult:
    """Pick ``k`` elements one at a time, each maximizing the marginal gain.

    With ``lazy=True`` stale gains are kept in a priority queue and only the
    top one is refreshed; for submodular ``fn`` the picks are identical to the
    standard scan.
    """
    m = fn.ground_size if ground_size is None else ground_size
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= M, got k={k}, M={m}")
    if lazy:
        return _lazy_greedy(fn, k, m)
    picks: list[int] = []
    trace: list[Any] = []
    remaining = list(range(m))
    for _ in range(k):
        gains = fn.gains(picks, remaining)
        gain, _, v = best_candidate((g, fn.tie_key(v), v) for v, g in zip(remaining, gains))
        picks.append(v)
        trace.append(_scalar(gain))
        remaining.remove(v)
    return GreedyResult(picks, trace, _scalar(fn.value(picks)))


def _scalar(x):
    return x.item() if isinstance(x, np.generic) else x


def _lazy_greedy(fn: SetFunction, k: int, m: int) -> GreedyResult:
    picks: list[int] = []
    trace: list[Any] = []
    first = fn.gains([], list(range(m)))
    # (-gain, -tie, index, step at which gain was computed)
    heap = [(-_scalar(g), -_scalar(fn.tie_key(v)), v, 0) for v, g in zip(range(m), first)]
    heapq.heapify(heap)
    for step in range(k):
        while True:
            neg_gain, neg_tie, v, stamp = heapq.heappop(heap)
            if stamp == step:
                break
            fresh = _scalar(fn.gains(picks, [v])[0])
            heapq.heappush(heap, (-fresh, neg_tie, v, step))
        picks.append(v)
        trace.append(-neg_gain)
    return GreedyResult(picks, trace, _scalar(fn.value(picks)))
