"""Analytical and threshold-based bounds on the average delivery time."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .combinatorics import DEFAULT_CDF_EPS, binomial_tail_table, count_profiles
from .exact import DEFAULT_BUDGET, profile_table, t_min
from .network import IntensityVector, NetworkConfig, delay_weights, zipf_intensities

__all__ = [
    "BoundPair",
    "analytical_upper_bound",
    "analytical_lower_bound",
    "expected_top_load_bounds",
    "threshold_bounds",
    "nonuniform_upper_bound",
    "nonuniform_lower_bound",
    "proximity_upper_bound",
    "zipf_intensities",
]


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float
    method: str
    coverage: float | None = None
    profiles_used: int | None = None
    warning: str | None = None

    def __post_init__(self):
        if self.lower > self.upper + 1e-12 * max(1.0, abs(self.upper)):
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def _hinge_sums(tails: np.ndarray, scale: float, ranks: np.ndarray) -> np.ndarray:
    """For each rank r: sum_j max(1 - scale * tails[j] / r, 0).

    ``tails`` holds 1 - CDF over j = 0..K-1. Saturated entries (tail == 0)
    contribute exactly 1 each and are counted without evaluation.
    """
    saturated = int(np.count_nonzero(tails == 0.0))
    active = tails[tails > 0.0]
    out = np.full(ranks.size, float(saturated))
    if active.size:
        terms = 1.0 - scale * active[None, :] / ranks[:, None]
        out += np.maximum(terms, 0.0).sum(axis=1)
    return out


def _require_two_caches(cfg: NetworkConfig) -> None:
    if cfg.caches < 2:
        raise ValueError("lower bounds need at least 2 caches (they divide by caches - 1)")


def analytical_upper_bound(cfg: NetworkConfig, eps: float = DEFAULT_CDF_EPS) -> float:
    """Order-statistic upper bound on the optimal average delay (uniform caches)."""
    K, caches, t = cfg.users, cfg.caches, cfg.t
    if t == caches:
        return 0.0
    tails = binomial_tail_table(K, 1.0 / caches, eps)[:K]
    ranks = np.arange(1, caches - t + 1, dtype=float)
    w = delay_weights(cfg)[: caches - t]
    return K * (caches - t) / (t + 1) - math.fsum(w * _hinge_sums(tails, caches, ranks))


def _top_load_lower(K: int, caches: int, tails: np.ndarray) -> float:
    # K - sum_{j=ceil(K/caches)}^{K-1} P_j == ceil(K/caches) + sum of the tails there
    start = -(-K // caches)
    return start + math.fsum(tails[start:K])


def analytical_lower_bound(cfg: NetworkConfig, eps: float = DEFAULT_CDF_EPS) -> float:
    """Lower bound on the optimal average delay via E[l_1] (uniform caches)."""
    _require_two_caches(cfg)
    K, caches, t = cfg.users, cfg.caches, cfg.t
    if t == caches:
        return 0.0
    tails = binomial_tail_table(K, 1.0 / caches, eps)
    top = _top_load_lower(K, caches, tails)
    return (caches - t) / (1 + t) * (
        K / caches * (caches - t - 1) / (caches - 1) + t / (caches - 1) * top
    )


def expected_top_load_bounds(cfg: NetworkConfig, rank: int, eps: float = DEFAULT_CDF_EPS) -> BoundPair:
    """Bounds on E[l_rank], the expected load of the rank-th most populous cache."""
    K, caches = cfg.users, cfg.caches
    if not 1 <= rank <= caches:
        raise ValueError(f"rank must lie in [1, {caches}], got {rank}")
    tails = binomial_tail_table(K, 1.0 / caches, eps)
    upper = K - float(_hinge_sums(tails[:K], caches, np.array([float(rank)]))[0])
    lower = _top_load_lower(K, caches, tails) if rank == 1 else 0.0
    return BoundPair(lower, upper, "order-statistic")


def threshold_bounds(cfg: NetworkConfig, rho: float, budget: int | None = DEFAULT_BUDGET) -> BoundPair:
    """Numerical lower/upper bounds from the most likely profiles covering mass ``rho``.

    Profiles are ranked by P(L) (ties by enumeration order) and accumulated
    until their mass reaches ``rho``; the remainder is padded with the best
    case T_min (lower) or the worst case K(1 - gamma) (upper). ``coverage``
    reports the mass actually covered. If the enumeration budget stops the
    stream first, bounds are returned at the reachable coverage with a warning.
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    logps, delays = [], []
    for _, logp, d in profile_table(cfg, budget):
        logps.append(logp)
        delays.append(d)
    logp = np.concatenate(logps)
    delay = np.concatenate(delays)
    truncated = budget is not None and count_profiles(cfg.users, cfg.caches) > budget
    order = np.argsort(-logp, kind="stable")
    prob = np.exp(logp[order])
    cum = np.cumsum(prob)
    hit = np.nonzero(cum >= rho)[0]
    warning = None
    if hit.size:
        n = int(hit[0]) + 1
    else:
        n = prob.size
        if truncated:
            warning = f"budget reached before coverage {rho}"
    chosen = order[:n]
    partial = math.fsum(np.exp(logp[chosen]) * delay[chosen])
    if n == logp.size and not truncated:
        coverage = 1.0
    else:
        coverage = min(math.fsum(np.exp(logp[chosen])), 1.0)
    best, worst = t_min(cfg), cfg.worst_delay
    lower = partial + (1.0 - coverage) * best
    upper = partial + (1.0 - coverage) * worst
    return BoundPair(lower, upper, "threshold", coverage=coverage, profiles_used=n, warning=warning)


def nonuniform_upper_bound(cfg: NetworkConfig, p: IntensityVector, eps: float = DEFAULT_CDF_EPS) -> float:
    """Upper bound on the average delay for arbitrary cache intensities."""
    K, caches, t = cfg.users, cfg.caches, cfg.t
    if len(p) != caches:
        raise ValueError(f"intensity vector has {len(p)} entries, expected {caches}")
    if t == caches:
        return 0.0
    # caches - F(j) = sum_k P[v_k > j]; equal intensities share one table.
    values, counts = np.unique(p.probs, return_counts=True)
    order = np.argsort(-values, kind="stable")
    total_tail = np.zeros(K)
    for v, c in zip(values[order], counts[order]):
        total_tail += c * binomial_tail_table(K, float(v), eps)[:K]
    ranks = np.arange(1, caches - t + 1, dtype=float)
    w = delay_weights(cfg)[: caches - t]
    return K * (caches - t) / (1 + t) - math.fsum(w * _hinge_sums(total_tail, 1.0, ranks))


def nonuniform_lower_bound(cfg: NetworkConfig, p: IntensityVector) -> float:
    """Lower bound using E[l_1] >= K max(p)."""
    _require_two_caches(cfg)
    K, caches, t = cfg.users, cfg.caches, cfg.t
    if len(p) != caches:
        raise ValueError(f"intensity vector has {len(p)} entries, expected {caches}")
    return (caches - t) / (1 + t) * (
        K * t * p.max / (caches - 1) + K / caches * (caches - t - 1) / (caches - 1)
    )


def proximity_upper_bound(cfg: NetworkConfig, h: int, eps: float = DEFAULT_CDF_EPS) -> float:
    """Upper bound under proximity load balancing with groups of ``h`` caches."""
    K, caches, t = cfg.users, cfg.caches, cfg.t
    if not 1 <= h <= caches:
        raise ValueError(f"h must lie in [1, {caches}], got {h}")
    tails = binomial_tail_table(K, h / caches, eps)[:K]
    hinge = float(_hinge_sums(tails, caches / h, np.array([1.0]))[0])
    return (caches - t) / (1 + t) * (1 + K / h - hinge / h)
