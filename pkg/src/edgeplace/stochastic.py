"""Moments, the capacity-minus-demand spread, and period sampling.

Variances come from paired historical samples when the instance carries them
for both cells and candidates; otherwise workloads and capacities are taken
as independent and variances add.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Instance


@dataclass(frozen=True)
class PeriodRealization:
    w: np.ndarray
    kcap: np.ndarray
    period_index: int


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    n: int = 1

    @property
    def stderr(self) -> float:
        return float(np.sqrt(self.variance / self.n))


def task_rng(seed: int, task: int = 0) -> np.random.Generator:
    """Independent stream for concurrent task ``task`` under a common seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, task]))


def nu_all(instance: Instance) -> np.ndarray:
    """Std of ``K_s - sum_i W_i`` for every candidate s, shape (M,)."""
    if instance.has_paired_samples:
        total = instance.workload_samples.sum(axis=0)
        return (instance.capacity_samples - total[None, :]).std(axis=1)
    return np.sqrt(instance.gamma**2 + np.sum(instance.sigma**2))


def nu(instance: Instance, s: int) -> float:
    if not 0 <= s < instance.n_candidates:
        raise IndexError(f"candidate {s} out of range [0, {instance.n_candidates})")
    if instance.has_paired_samples:
        total = instance.workload_samples.sum(axis=0)
        return float(np.std(instance.capacity_samples[s] - total))
    return float(np.sqrt(instance.gamma[s] ** 2 + np.sum(instance.sigma**2)))


def load_samples(workload_samples: np.ndarray, server_of: np.ndarray, servers) -> np.ndarray:
    """Per-period load on each server in ``servers``, shape (len(servers), T)."""
    servers = list(servers)
    pos = {s: j for j, s in enumerate(servers)}
    rows = np.fromiter((pos[s] for s in server_of), dtype=int, count=len(server_of))
    out = np.zeros((len(servers), workload_samples.shape[1]))
    np.add.at(out, rows, workload_samples)
    return out


def slack_variances(instance: Instance, servers, server_of: np.ndarray) -> np.ndarray:
    """``V[K_s - sum_{i on s} W_i]`` for each s in ``servers`` under the assignment."""
    servers = list(servers)
    server_of = np.asarray(server_of)
    if instance.has_paired_samples:
        loads = load_samples(instance.workload_samples, server_of, servers)
        return (instance.capacity_samples[servers] - loads).var(axis=1)
    sig2 = np.zeros(instance.n_candidates)
    np.add.at(sig2, server_of, instance.sigma**2)
    return instance.gamma[servers] ** 2 + sig2[servers]


def mc_expected_min(x_samples, y_samples) -> MomentSummary:
    """Sample mean and variance of ``min(X, Y)`` over paired draws."""
    x = np.asarray(x_samples, dtype=float)
    y = np.asarray(y_samples, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("mc_expected_min needs non-empty samples")
    if x.shape != y.shape:
        raise ValueError(f"paired samples must have equal length, got {x.shape} and {y.shape}")
    z = np.minimum(x, y)
    return MomentSummary(float(z.mean()), float(z.var(ddof=1)) if z.size > 1 else 0.0, int(z.size))


def expected_min_bounds(x_samples, y_samples) -> tuple[float, float]:
    """``min(EX, EY) - sqrt(V[X-Y]/2)`` and ``min(EX, EY)`` from sample moments."""
    x = np.asarray(x_samples, dtype=float)
    y = np.asarray(y_samples, dtype=float)
    upper = min(float(x.mean()), float(y.mean()))
    return upper - float(np.sqrt((x - y).var() / 2.0)), upper


def moment_matched_draws(rng: np.random.Generator, mean: np.ndarray, std: np.ndarray, size: int) -> np.ndarray:
    """Nonnegative draws with the given mean and std, shape (len(mean), size).

    Uses a Gamma law; rows with zero std or zero mean are constant.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    out = np.repeat(mean[:, None], size, axis=1)
    live = (std > 0) & (mean > 0)
    if live.any():
        shape = (mean[live] / std[live]) ** 2
        scale = std[live] ** 2 / mean[live]
        out[live] = rng.gamma(shape[:, None], scale[:, None], size=(int(live.sum()), size))
    return out


def sample_periods(instance: Instance, n_periods: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Fresh independent draws for ``n_periods`` periods: (N, T) workloads, (M, T) capacities."""
    rng = np.random.default_rng(seed)
    w = moment_matched_draws(rng, instance.mu, instance.sigma, n_periods)
    k = moment_matched_draws(rng, instance.kappa, instance.gamma, n_periods)
    return w, k


def period_matrices(instance: Instance, n_periods: int = 192, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Stored periods when the instance has paired samples, otherwise fresh draws."""
    if instance.has_paired_samples:
        return instance.workload_samples, instance.capacity_samples
    return sample_periods(instance, n_periods, seed)


def draw_period(instance: Instance, t: int | None = None, seed: int | None = None) -> PeriodRealization:
    """One period: stored column ``t`` or, without stored samples, a seeded draw."""
    if instance.has_paired_samples and seed is None:
        T = instance.n_periods
        t = 0 if t is None else t
        if not 0 <= t < T:
            raise IndexError(f"period {t} out of range [0, {T})")
        return PeriodRealization(
            instance.workload_samples[:, t].copy(), instance.capacity_samples[:, t].copy(), t
        )
    if seed is None:
        raise ValueError("instance has no stored periods; pass a seed to sample one")
    w, k = sample_periods(instance, 1, seed)
    return PeriodRealization(w[:, 0], k[:, 0], -1 if t is None else t)
