import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgeplace.greedy import (
    CoverageFunction,
    FunctionOf,
    ModularFunction,
    SetFunction,
    best_candidate,
    greedy_max,
)
from edgeplace.objective import LowerBound, UpperBound, Weights, h_values

from factories import random_instance

RATIO = 1 - 1 / math.e


def random_coverage(rng, n_elements=8, m=6):
    return CoverageFunction([set(np.flatnonzero(rng.random(n_elements) < 0.35).tolist()) for _ in range(m)])


def brute_best(fn, k):
    return max(fn.value(list(S)) for S in itertools.combinations(range(fn.ground_size), k))


def test_modular_picks_top_k():
    res = greedy_max(ModularFunction([5, 3, 2, 1]), 2)
    assert res.picks == [0, 1]
    assert res.gains == [5, 3]
    assert res.value == 8


def test_constant_function_picks_smallest_indices():
    res = greedy_max(FunctionOf(lambda S: 7, 5), 3)
    assert res.picks == [0, 1, 2]
    assert res.gains == [0, 0, 0]


@pytest.mark.parametrize("k", [0, 5])
def test_k_out_of_range(k):
    with pytest.raises(ValueError, match="1 <= k <= M"):
        greedy_max(ModularFunction([1, 2, 3, 4]), k)


@pytest.mark.parametrize("seed", range(100))
def test_coverage_ratio(seed):
    fn = random_coverage(np.random.default_rng(seed))
    res = greedy_max(fn, 3)
    assert res.value >= RATIO * brute_best(fn, 3)


def test_tie_key_breaks_equal_gains():
    class Keyed(SetFunction):
        ground_size = 4

        def value(self, S):
            return 1 if S else 0

        def tie_key(self, v):
            return [0.1, 0.5, 0.5, 0.2][v]

    assert greedy_max(Keyed(), 3).picks == [1, 2, 3]


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2)), min_size=1, max_size=12), st.randoms())
def test_best_candidate_independent_of_order(pairs, rnd):
    entries = [(g, t, v) for v, (g, t) in enumerate(pairs)]
    shuffled = list(entries)
    rnd.shuffle(shuffled)
    assert best_candidate(entries) == best_candidate(shuffled)
    gain, tie, v = best_candidate(entries)
    top = max(g for g, _, _ in entries)
    assert gain == top
    assert tie == max(t for g, t, _ in entries if g == top)
    assert v == min(i for g, t, i in entries if g == top and t == tie)


def test_best_candidate_empty():
    with pytest.raises(ValueError):
        best_candidate([])


class _Permuted(SetFunction):
    """Same function with the candidate list handed to ``gains`` reordered."""

    def __init__(self, inner, seed):
        self.inner = inner
        self.ground_size = inner.ground_size
        self.rnd = random.Random(seed)

    def value(self, S):
        return self.inner.value(S)

    def gains(self, S, candidates):
        order = list(range(len(candidates)))
        self.rnd.shuffle(order)
        out = [None] * len(candidates)
        for j in order:
            out[j] = self.inner.gains(S, [candidates[j]])[0]
        return out

    def tie_key(self, v):
        return self.inner.tie_key(v)


@pytest.mark.parametrize("seed", range(10))
def test_output_invariant_to_evaluation_order(seed):
    inst = random_instance(np.random.default_rng(seed), n=10, m=8)
    w = Weights(0.6)
    for fn in (UpperBound(inst, w), LowerBound(inst, w)):
        assert greedy_max(_Permuted(fn, seed), 4).picks == greedy_max(fn, 4).picks


@pytest.mark.parametrize("seed", range(25))
def test_lazy_matches_standard(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n=12, m=9, paired=bool(seed % 2))
    w = Weights(float(rng.uniform()))
    for fn in (UpperBound(inst, w), LowerBound(inst, w), random_coverage(rng, 15, 9)):
        a, b = greedy_max(fn, 5), greedy_max(fn, 5, lazy=True)
        assert a.picks == b.picks
        np.testing.assert_allclose(a.gains, b.gains, rtol=1e-12, atol=1e-12)


def _non_increasing(gains):
    return all(b <= a + 1e-9 * max(1.0, abs(a)) for a, b in zip(gains, gains[1:]))


def test_gain_traces_non_increasing():
    checked_lower = 0
    for seed in range(40):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, n=15, m=10, cv=(0.05, 0.5))
        w = Weights(float(rng.uniform()))
        assert _non_increasing(greedy_max(UpperBound(inst, w), 6).gains)
        # the lower bound is only submodular when no h is negative
        if h_values(inst, w).min() >= 0:
            checked_lower += 1
            assert _non_increasing(greedy_max(LowerBound(inst, w), 6).gains)
    assert checked_lower >= 10


def test_lower_bound_trace_with_negative_h():
    # with every h below zero the first pick loses value against the empty set,
    # so the lower bound is neither monotone nor has a decreasing trace
    inst = random_instance(np.random.default_rng(3), n=15, m=10, cv=(2.0, 3.0))
    w = Weights(1.0)
    h = h_values(inst, w)
    assert h.max() < 0
    gains = greedy_max(LowerBound(inst, w), 3).gains
    assert gains == [float(h.max()), 0.0, 0.0]


@pytest.mark.parametrize("seed", range(10))
def test_lower_bound_greedy_picks_top_h(seed):
    inst = random_instance(np.random.default_rng(seed), n=10, m=8)
    w = Weights(0.5)
    h = h_values(inst, w)
    picks = greedy_max(LowerBound(inst, w), 4).picks
    assert picks == sorted(range(8), key=lambda s: (-h[s], s))[:4]
