import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from edgeplace.baselines import nearest_assignment
from edgeplace.greedy import FunctionOf, ModularFunction
from edgeplace.instance import Instance
from edgeplace.objective import Deployment, Weights, f_hat, f_u, g_u, g_val, omega_hat, pi_l, pi_u
from edgeplace.oracle import (
    ENUMERATION_GUARD,
    ExactObjectives,
    GuardExceeded,
    _assignment_block,
    brute_force_assignment,
    brute_force_deployment,
    check_monotone,
    check_submodular,
    exhaustive_inner_value,
)
from edgeplace.solver import solve

from factories import random_assignment, random_instance


def test_single_server_only_assignment():
    inst = random_instance(np.random.default_rng(0), n=4, m=3)
    z, value = brute_force_assignment(inst, [1], Weights(0.5))
    assert z.tolist() == [1] * 4
    assert value == pytest.approx(omega_hat(inst, Deployment((1,), z), Weights(0.5)), rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_pure_communication_is_nearest(seed):
    inst = random_instance(np.random.default_rng(seed), n=6, m=4)
    z, _ = brute_force_assignment(inst, [0, 2, 3], Weights(0.0))
    assert z.tolist() == nearest_assignment(inst, [0, 2, 3]).tolist()


@pytest.mark.parametrize("seed", range(10))
def test_best_assignment_beats_random_ones(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n=4, m=3)
    w = Weights(float(rng.uniform()))
    _, best = brute_force_assignment(inst, [0, 2], w)
    for _ in range(50):
        dep = Deployment((0, 2), random_assignment(rng, [0, 2], 4))
        assert omega_hat(inst, dep, w) <= best + 1e-12 * max(1.0, best)


def test_assignment_block_is_lexicographic():
    rows = _assignment_block(3, 2, 0, 8)
    assert [tuple(r) for r in rows] == list(itertools.product(range(2), repeat=3))
    assert _assignment_block(3, 2, 5, 7).tolist() == [[1, 0, 1], [1, 1, 0]]


def test_ties_go_to_smallest_assignment():
    inst = Instance([1.0, 1.0], [0.0, 0.0], [5.0, 5.0, 5.0], [0.0, 0.0, 0.0], d=np.zeros((2, 3)))
    z, _ = brute_force_assignment(inst, [2, 1], Weights(0.5))
    assert z.tolist() == [1, 1]


def test_deployment_with_k_equal_m():
    rng = np.random.default_rng(1)
    inst = random_instance(rng, n=4, m=3)
    w = Weights(0.3)
    res = brute_force_deployment(inst, 3, w)
    z, value = brute_force_assignment(inst, [0, 1, 2], w)
    assert res.best_value == value
    assert res.best_deployment == Deployment((0, 1, 2), z)
    assert res.enumerated_count == 3**4


def test_deployment_single_cell_scan():
    rng = np.random.default_rng(2)
    inst = random_instance(rng, n=1, m=4)
    w = Weights(0.6)
    res = brute_force_deployment(inst, 1, w)
    scan = [w.lambda1 * min(inst.kappa[s], inst.mu[0]) + w.lambda2 * inst.c[0, s] for s in range(4)]
    assert res.best_value == pytest.approx(max(scan), rel=1e-12)
    assert res.best_deployment.servers == (int(np.argmax(scan)),)
    assert res.enumerated_count == 4


@pytest.mark.parametrize("seed", range(10))
def test_enumerated_count_and_order_independence(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n=4, m=4)
    w = Weights(float(rng.uniform()))
    res = brute_force_deployment(inst, 2, w)
    assert res.enumerated_count == math.comb(4, 2) * 2**4
    perm = rng.permutation(4)
    shuffled = Instance(inst.mu, inst.sigma, inst.kappa[perm], inst.gamma[perm], d=inst.d[:, perm])
    other = brute_force_deployment(shuffled, 2, w)
    assert other.best_value == pytest.approx(res.best_value, rel=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_oracle_dominates_solver(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n=5, m=4, paired=bool(seed % 2))
    w = Weights(float(rng.uniform()))
    k = int(rng.integers(1, 3))
    assert brute_force_deployment(inst, k, w).best_value >= solve(inst, k, w).objective - 1e-9


def test_guards():
    inst = random_instance(np.random.default_rng(0), n=30, m=5)
    with pytest.raises(GuardExceeded):
        brute_force_assignment(inst, [0, 1], Weights(0.5))
    with pytest.raises(GuardExceeded):
        brute_force_deployment(inst, 2, Weights(0.5))
    with pytest.raises(ValueError):
        brute_force_deployment(inst, 6, Weights(0.5))
    assert ENUMERATION_GUARD == 10**7


def test_modular_is_submodular():
    report = check_submodular(ModularFunction([3, 1, 4, 1, 5, 9]), trials=500)
    assert report.ok and report.worst_gap == 0
    assert check_monotone(ModularFunction([3, 1, 4, 1, 5, 9]), trials=500).ok


def test_square_of_size_is_flagged():
    report = check_submodular(FunctionOf(lambda S: len(S) ** 2, 5), trials=200)
    assert report.violations > 0
    S, v1, v2, gap = report.witnesses[0]
    assert gap == 2 and v1 not in S and v2 not in S


def test_decreasing_function_not_monotone():
    report = check_monotone(FunctionOf(lambda S: -len(S), 4), trials=50)
    assert report.violations == 50


@pytest.mark.parametrize("seed", range(10))
def test_exact_objectives_agree_with_floats(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n=9, m=5, paired=bool(seed % 2))
    w = Weights(float(rng.uniform()))
    ex = ExactObjectives(inst, w)
    for size in range(0, 6):
        for S in itertools.combinations(range(5), size):
            assert float(ex.f_u(S)) == pytest.approx(f_u(inst, S), rel=1e-12)
            assert float(ex.g_u(S)) == pytest.approx(g_u(inst, S), rel=1e-12, abs=1e-12)
            assert float(ex.pi_u(S)) == pytest.approx(pi_u(inst, S, w), rel=1e-12, abs=1e-12)
            assert float(ex.pi_l(S)) == pi_l(inst, S, w)
    dep = Deployment((1, 3), random_assignment(rng, [1, 3], 9))
    assert float(ex.f_hat(dep)) == pytest.approx(f_hat(inst, dep), rel=1e-12)
    assert float(ex.g_val(dep)) == pytest.approx(g_val(inst, dep), rel=1e-12)


def test_exact_objectives_are_rational():
    inst = Instance([0.1, 0.2], [0.0, 0.0], [0.3, 0.5], [0.0, 0.0], d=[[0.0, 0.5], [0.25, 1.0]])
    ex = ExactObjectives(inst, Weights(0.5))
    assert ex.f_u([0]) == Fraction(0.3)
    assert ex.f_u([0, 1]) == Fraction(0.1) + Fraction(0.2)
    assert ex.g_u([0, 1]) == Fraction(7, 4)


@pytest.mark.parametrize("seed", range(5))
def test_bound_evaluators_pass_exactly(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n=10, m=7, cv=(0.05, 0.3), cap_scale=200.0)
    w = Weights(float(rng.uniform()))
    ex = ExactObjectives(inst, w)
    for name in ("f_u", "g_u", "pi_u"):
        assert check_submodular(ex.evaluator(name), trials=300, seed=seed).ok
        assert check_monotone(ex.evaluator(name), trials=300, seed=seed).ok


@pytest.mark.parametrize("seed", range(8))
def test_inner_optimum_monotone_in_server_set(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n=int(rng.integers(2, 7)), m=5)
    w = Weights(float(rng.uniform()))
    values = {S: exhaustive_inner_value(inst, S, w)
              for size in range(1, 6) for S in itertools.combinations(range(5), size)}
    for S, value in values.items():
        for v in set(range(5)) - set(S):
            assert value <= values[tuple(sorted((*S, v)))]
