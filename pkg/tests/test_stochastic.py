import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgeplace.instance import Instance
from edgeplace.stochastic import (
    draw_period,
    expected_min_bounds,
    mc_expected_min,
    moment_matched_draws,
    nu,
    nu_all,
    period_matrices,
    sample_periods,
    slack_variances,
    task_rng,
)

from factories import random_instance


def test_nu_zero_for_constants():
    inst = Instance([1.0, 2.0], [0.0, 0.0], [3.0], [0.0], d=[[0.1], [0.2]])
    assert nu(inst, 0) == 0.0


def test_nu_three_four_five():
    inst = Instance([1.0, 2.0], [4.0, 0.0], [3.0], [3.0], d=[[0.1], [0.2]])
    assert nu(inst, 0) == 5.0
    assert nu_all(inst).tolist() == [5.0]


def test_nu_out_of_range():
    inst = Instance([1.0], [0.0], [3.0], [0.0], d=[[0.0]])
    with pytest.raises(IndexError):
        nu(inst, 1)


def test_nu_empirical_matches_independence():
    rng = np.random.default_rng(4)
    mu = rng.uniform(1, 10, 8)
    sigma = mu * rng.uniform(0.2, 1.0, 8)
    kappa = np.array([20.0, 40.0, 60.0])
    gamma = 0.4 * kappa
    w = moment_matched_draws(rng, mu, sigma, 1000)
    k = moment_matched_draws(rng, kappa, gamma, 1000)
    paired = Instance.from_samples(w, k, d=np.full((8, 3), 0.5))
    indep = Instance(paired.mu, paired.sigma, paired.kappa, paired.gamma, d=paired.d)
    np.testing.assert_allclose(nu_all(paired), nu_all(indep), rtol=0.05)
    for s in range(3):
        assert nu(paired, s) == pytest.approx(nu_all(paired)[s], rel=1e-12)


# tiny positive values square to zero in floating point, so keep them away
_spread = st.one_of(st.just(0.0), st.floats(1e-6, 10))


@given(st.lists(_spread, min_size=1, max_size=6), _spread)
def test_nu_zero_iff_no_variance(sigmas, gamma):
    n = len(sigmas)
    inst = Instance(np.ones(n), sigmas, [1.0], [gamma], d=np.zeros((n, 1)))
    assert nu(inst, 0) >= 0
    assert (nu(inst, 0) == 0) == (gamma == 0 and all(x == 0 for x in sigmas))


def test_slack_variances_independent():
    inst = Instance([1.0, 1.0, 1.0], [1.0, 2.0, 3.0], [5.0, 5.0], [1.0, 2.0], d=np.zeros((3, 2)))
    var = slack_variances(inst, [0, 1], np.array([0, 1, 1]))
    assert var.tolist() == [1.0 + 1.0, 4.0 + 4.0 + 9.0]


def test_mc_expected_min_constants():
    summary = mc_expected_min([2.0] * 5, [3.0] * 5)
    assert summary.mean == 2.0 and summary.variance == 0.0
    assert expected_min_bounds([2.0] * 5, [3.0] * 5) == (2.0, 2.0)


def test_mc_expected_min_exponentials():
    rng = np.random.default_rng(0)
    x, y = rng.exponential(1.0, 10**5), rng.exponential(1.0, 10**5)
    summary = mc_expected_min(x, y)
    assert abs(summary.mean - 0.5) <= 3 * summary.stderr
    lo, hi = expected_min_bounds(x, y)
    assert lo == pytest.approx(0.0, abs=0.02) and hi == pytest.approx(1.0, abs=0.02)
    assert lo - 3 * summary.stderr <= summary.mean <= hi + 3 * summary.stderr


def test_mc_expected_min_with_zero():
    y = np.random.default_rng(1).gamma(0.5, 3.0, 100)
    assert mc_expected_min(np.zeros(100), y).mean == 0.0


def test_mc_expected_min_errors():
    with pytest.raises(ValueError, match="non-empty"):
        mc_expected_min([], [])
    with pytest.raises(ValueError, match="equal length"):
        mc_expected_min([1.0, 2.0], [1.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_min_bounds_hold_on_gamma_pairs(seed, cv_x, cv_y):
    rng = np.random.default_rng(seed)
    x = moment_matched_draws(rng, np.array([5.0]), np.array([5.0 * cv_x]), 4000)[0]
    y = moment_matched_draws(rng, np.array([4.0]), np.array([4.0 * cv_y]), 4000)[0]
    summary = mc_expected_min(x, y)
    lo, hi = expected_min_bounds(x, y)
    slack = 3 * summary.stderr
    assert lo - slack <= summary.mean <= hi + slack


def test_moment_matched_draws_moments():
    rng = np.random.default_rng(2)
    mean, std = np.array([1.0, 50.0, 3.0, 0.0]), np.array([0.5, 10.0, 0.0, 1.0])
    draws = moment_matched_draws(rng, mean, std, 10**4)
    assert np.all(draws >= 0)
    np.testing.assert_allclose(draws.mean(axis=1)[:2], mean[:2], rtol=0.03)
    np.testing.assert_allclose(draws.std(axis=1)[:2], std[:2], rtol=0.05)
    assert np.all(draws[2] == 3.0) and np.all(draws[3] == 0.0)


def test_draw_period_stored_first_column():
    inst = random_instance(np.random.default_rng(3), paired=True, periods=10)
    p = draw_period(inst, t=0)
    assert p.period_index == 0
    np.testing.assert_array_equal(p.w, inst.workload_samples[:, 0])
    np.testing.assert_array_equal(p.kcap, inst.capacity_samples[:, 0])
    with pytest.raises(IndexError):
        draw_period(inst, t=10)


def test_draw_period_seeded_is_deterministic():
    inst = random_instance(np.random.default_rng(3))
    a, b = draw_period(inst, seed=9), draw_period(inst, seed=9)
    assert a.w.tobytes() == b.w.tobytes() and a.kcap.tobytes() == b.kcap.tobytes()
    assert np.all(a.w >= 0) and np.all(a.kcap >= 0)
    assert draw_period(inst, seed=10).w.tobytes() != a.w.tobytes()


def test_sampled_workloads_law_of_large_numbers():
    inst = random_instance(np.random.default_rng(5), n=6, cv=(0.3, 1.2))
    w, _ = sample_periods(inst, 10**4, seed=0)
    err = np.abs(w.mean(axis=1) - inst.mu)
    assert np.all(err <= 3 * inst.sigma / 100)


def test_period_matrices_prefers_stored():
    inst = random_instance(np.random.default_rng(6), paired=True, periods=12)
    w, k = period_matrices(inst, n_periods=99, seed=1)
    assert w.shape == (inst.n_cells, 12) and k.shape == (inst.n_candidates, 12)
    fresh = random_instance(np.random.default_rng(6))
    w, k = period_matrices(fresh, n_periods=7, seed=1)
    assert w.shape == (fresh.n_cells, 7)


def test_task_streams_are_distinct_and_reproducible():
    a = task_rng(5, 0).random(4)
    assert a.tobytes() == task_rng(5, 0).random(4).tobytes()
    assert not math.isclose(a[0], task_rng(5, 1).random(4)[0])
