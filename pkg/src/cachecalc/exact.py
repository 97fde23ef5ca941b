"""Exact average delivery time under uniformly random user-to-cache association.

Two independent exact routes are provided:

* :func:`exact_average_delay` sums P(L) T(L) over every profile vector L,
  streaming the integer partitions of K.
* :func:`order_statistic_average_delay` computes the expected sorted loads
  E[l_rank] directly from the multinomial occupancy distribution
  (Poissonization plus polynomial convolution), which stays cheap when the
  number of profiles explodes.

Both agree to ~1e-12 relative wherever enumeration is feasible.
"""
from __future__ import annotations

import math
from typing import Iterator, Sequence

import numpy as np

from .combinatorics import (
    count_profiles,
    enumerate_profiles,
    log_factorial,
    log_factorial_array,
    multiplicity_groups,
)
from .network import NetworkConfig, delay_weights

DEFAULT_BUDGET = 50_000_000
DEFAULT_BRUTE_FORCE_LIMIT = 100_000_000
_BATCH = 8192


class EnumerationBudgetExceeded(RuntimeError):
    """Raised when the profile set is larger than the allowed budget."""

    def __init__(self, cfg: NetworkConfig, size: int, budget: int):
        self.cfg = cfg
        self.size = size
        self.budget = budget
        super().__init__(
            f"{size} profiles for K={cfg.users}, caches={cfg.caches} exceed the "
            f"enumeration budget of {budget}; use the analytical/threshold bounds "
            f"or simulation instead (or raise --budget)"
        )


def _check_profile(loads: Sequence[int], cfg: NetworkConfig) -> np.ndarray:
    arr = np.asarray(loads, dtype=np.int64)
    if arr.ndim != 1 or arr.size != cfg.caches:
        raise ValueError(f"profile has {arr.size} entries, expected caches={cfg.caches}")
    if arr.sum() != cfg.users:
        raise ValueError(f"profile sums to {int(arr.sum())}, expected K={cfg.users}")
    if np.any(arr < 0) or np.any(np.diff(arr) > 0):
        raise ValueError("profile must be non-negative and sorted non-increasing")
    return arr


def delay_of_profile(loads: Sequence[int], cfg: NetworkConfig) -> float:
    """Worst-case delivery time T(L) for a sorted profile vector."""
    arr = _check_profile(loads, cfg)
    w = delay_weights(cfg)
    return math.fsum(w * arr)


def log_profile_probability(loads: Sequence[int], cfg: NetworkConfig) -> float:
    """ln P(L) under equiprobable caches."""
    arr = _check_profile(loads, cfg)
    K, caches = cfg.users, cfg.caches
    value = log_factorial(K) - K * math.log(caches) + log_factorial(caches)
    value -= math.fsum(log_factorial(int(x)) for x in arr)
    value -= math.fsum(log_factorial(b) for b in multiplicity_groups(arr.tolist()))
    return value


def profile_probability(loads: Sequence[int], cfg: NetworkConfig) -> float:
    """P(L): probability that the sorted cache loads equal ``loads``."""
    return math.exp(log_profile_probability(loads, cfg))


def t_min(cfg: NetworkConfig) -> float:
    """Best-case (perfectly balanced) delivery time."""
    K, caches, t = cfg.users, cfg.caches, cfg.t
    if t == caches:
        return 0.0
    base, rem = divmod(K, caches)
    if rem == 0:
        f = 1.0
    elif rem >= caches - t:
        f = 0.0
    else:
        num = math.prod(caches - i for i in range(t + 1, rem + t + 1))
        den = math.prod(caches - j for j in range(rem))
        f = num / den
    return (caches - t) / (1 + t) * (base + 1 - f)


def balanced_profile(cfg: NetworkConfig) -> tuple[int, ...]:
    base, rem = divmod(cfg.users, cfg.caches)
    return tuple([base + 1] * rem + [base] * (cfg.caches - rem))


def _batched_profiles(K: int, caches: int, size: int = _BATCH) -> Iterator[np.ndarray]:
    buf: list[tuple[int, ...]] = []
    for prof in enumerate_profiles(K, caches):
        buf.append(prof)
        if len(buf) == size:
            yield np.array(buf, dtype=np.int64)
            buf = []
    if buf:
        yield np.array(buf, dtype=np.int64)


def _log_probabilities(batch: np.ndarray, K: int, caches: int, lf: np.ndarray) -> np.ndarray:
    """Vectorised ln P(L) for a batch of sorted profiles (one per row)."""
    out = lf[K] - K * math.log(caches) + lf[caches] - lf[batch].sum(axis=1)
    # sum over groups of ln(b!) == sum over positions of ln(position within run)
    run = np.ones(batch.shape[0])
    log_runs = np.zeros(batch.shape[0])
    for c in range(1, caches):
        run = np.where(batch[:, c] == batch[:, c - 1], run + 1.0, 1.0)
        log_runs += np.log(run)
    return out - log_runs


def profile_table(cfg: NetworkConfig, budget: int | None = DEFAULT_BUDGET) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Stream ``(profiles, log_probabilities, delays)`` batches over all profiles.

    Stops early, without raising, once ``budget`` profiles have been produced.
    """
    K, caches = cfg.users, cfg.caches
    lf = log_factorial_array(max(K, caches))
    w = delay_weights(cfg)
    seen = 0
    for batch in _batched_profiles(K, caches):
        if budget is not None and seen + len(batch) > budget:
            batch = batch[: budget - seen]
            if not len(batch):
                return
        seen += len(batch)
        yield batch, _log_probabilities(batch, K, caches, lf), batch @ w
        if budget is not None and seen >= budget:
            return


def _require_budget(cfg: NetworkConfig, budget: int | None) -> None:
    if budget is None:
        return
    size = count_profiles(cfg.users, cfg.caches)
    if size > budget:
        raise EnumerationBudgetExceeded(cfg, size, budget)


def exact_average_delay(cfg: NetworkConfig, budget: int | None = DEFAULT_BUDGET) -> float:
    """Optimal average delay: sum over profiles of P(L) T(L)."""
    if cfg.t == cfg.caches:
        return 0.0
    _require_budget(cfg, budget)
    partials = []
    for _, logp, delays in profile_table(cfg, None):
        partials.append(math.fsum(np.exp(logp) * delays))
    return math.fsum(partials)


def exact_rank_loads(cfg: NetworkConfig, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
    """E[l_rank] for rank = 1..caches, by enumeration."""
    _require_budget(cfg, budget)
    parts: list[np.ndarray] = []
    for batch, logp, _ in profile_table(cfg, None):
        parts.append(np.exp(logp) @ batch)
    stacked = np.array(parts)
    return np.array([math.fsum(stacked[:, c]) for c in range(cfg.caches)])


def average_delay_from_rank_loads(rank_loads: Sequence[float], cfg: NetworkConfig) -> float:
    """sum_rank E[l_rank] C(caches-rank, t)/C(caches, t)."""
    return math.fsum(delay_weights(cfg) * np.asarray(rank_loads, dtype=float))


def total_probability(cfg: NetworkConfig, budget: int | None = DEFAULT_BUDGET) -> float:
    _require_budget(cfg, budget)
    return math.fsum(math.fsum(np.exp(logp)) for _, logp, _ in profile_table(cfg, None))


def _truncated_conv(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return np.convolve(a, b)[:n]


def order_statistic_rank_loads(cfg: NetworkConfig) -> np.ndarray:
    """E[l_rank] for rank = 1..caches via the occupancy distribution.

    With N_j the number of caches holding more than j users,
    l_rank > j  iff  N_j >= rank, so E[l_rank] = sum_j P[N_j >= rank].
    P[N_j = m] is C(caches, m) [x^K] A_j(x)^m B_j(x)^(caches-m), normalised,
    where B_j / A_j are the Poisson(K/caches) pmf restricted to <= j / > j.
    """
    K, caches = cfg.users, cfg.caches
    mu = K / caches
    lf = log_factorial_array(K)
    i = np.arange(K + 1, dtype=float)
    pois = np.exp(-mu + i * math.log(mu) - lf)
    log_norm = -K + K * math.log(K) - lf[K]
    log_choose = np.array([math.lgamma(caches + 1) - math.lgamma(m + 1) - math.lgamma(caches - m + 1)
                           for m in range(caches + 1)])
    n = K + 1
    tails = np.zeros((K, caches + 1))  # tails[j, m] = P[N_j = m]
    for j in range(K):
        b = pois.copy()
        b[j + 1:] = 0.0
        a = pois - b
        pow_a = [np.eye(1, n)[0]]
        pow_b = [np.eye(1, n)[0]]
        for _ in range(caches):
            pow_a.append(_truncated_conv(pow_a[-1], a, n))
            pow_b.append(_truncated_conv(pow_b[-1], b, n))
        for m in range(caches + 1):
            coeff = float(np.dot(pow_a[m], pow_b[caches - m][::-1]))
            if coeff > 0.0:
                tails[j, m] = math.exp(log_choose[m] + math.log(coeff) - log_norm)
    # P[N_j >= rank] summed over j.
    at_least = np.cumsum(tails[:, ::-1], axis=1)[:, ::-1]
    return np.array([math.fsum(at_least[:, r]) for r in range(1, caches + 1)])


def order_statistic_average_delay(cfg: NetworkConfig) -> float:
    """Optimal average delay from exact expected sorted loads (no enumeration)."""
    if cfg.t == cfg.caches:
        return 0.0
    return average_delay_from_rank_loads(order_statistic_rank_loads(cfg), cfg)


def brute_force_average_delay(cfg: NetworkConfig, limit: int = DEFAULT_BRUTE_FORCE_LIMIT) -> float:
    """Average of T(sort(V)) over all caches**K user-to-cache associations."""
    K, caches = cfg.users, cfg.caches
    total = caches**K
    if total > limit:
        raise ValueError(f"{total} associations exceed the brute-force limit of {limit}")
    w = delay_weights(cfg)
    powers = caches ** np.arange(K, dtype=np.int64)
    partials = []
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % caches
        loads = np.zeros((idx.size, caches), dtype=np.int64)
        np.add.at(loads, (np.repeat(np.arange(idx.size), K), digits.ravel()), 1)
        loads = -np.sort(-loads, axis=1)
        partials.append(math.fsum(loads @ w))
    return math.fsum(partials) / total


def deterioration(cfg: NetworkConfig, budget: int | None = DEFAULT_BUDGET, method: str = "enumerate") -> float:
    """G = average delay / T_min; defined as 1 when t = caches."""
    if cfg.t == cfg.caches:
        return 1.0
    return average_delay(cfg, budget, method) / t_min(cfg)


def average_delay(cfg: NetworkConfig, budget: int | None = DEFAULT_BUDGET, method: str = "enumerate") -> float:
    if method == "enumerate":
        return exact_average_delay(cfg, budget)
    if method == "order-stats":
        return order_statistic_average_delay(cfg)
    if method == "auto":
        if budget is not None and count_profiles(cfg.users, cfg.caches) > budget:
            return order_statistic_average_delay(cfg)
        return exact_average_delay(cfg, budget)
    raise ValueError(f"unknown method {method!r}")
