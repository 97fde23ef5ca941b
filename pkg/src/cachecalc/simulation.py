"""Seeded Monte Carlo sampling of user-to-cache associations.

Random streams
--------------
Samples are generated in fixed-size chunks. Chunk ``c`` of a run with seed
``s`` draws from a Philox-4x64 counter-based generator keyed by
``SeedSequence([s, c])``. The chunk size depends only on the policy and the
instance, so the sample set (and every reported statistic) is identical for
any number of workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exact import t_min
from .network import IntensityVector, NetworkConfig, delay_weights, zipf_intensities

POLICY_KINDS = ("uniform", "hchoice", "proximity")
REGIMES = ("K=L", "K=LlnL", "K=L^2")
THREADS_ENV = "CACHECALC_THREADS"
Z_95 = 1.96


@dataclass(frozen=True)
class AssociationPolicy:
    """How users pick a cache: ``uniform``, ``hchoice`` (least loaded of h
    random caches) or ``proximity`` (least loaded inside a random block of h
    neighbouring caches)."""

    kind: str
    intensities: IntensityVector
    h: int = 1

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.kind == "uniform" and self.h != 1:
            raise ValueError("the uniform policy has no h parameter")
        if not 1 <= self.h <= self.caches:
            raise ValueError(f"h must lie in [1, {self.caches}], got {self.h}")
        if self.kind == "hchoice" and self.h > np.count_nonzero(self.intensities.probs):
            raise ValueError("h exceeds the number of caches with positive intensity")

    @classmethod
    def make(cls, kind: str, caches: int, h: int = 1, alpha: float | None = None) -> "AssociationPolicy":
        p = IntensityVector.uniform(caches) if not alpha else zipf_intensities(caches, alpha)
        return cls(kind, p, 1 if kind == "uniform" else h)

    @property
    def caches(self) -> int:
        return len(self.intensities)

    def describe(self) -> str:
        base = self.kind if self.kind == "uniform" else f"{self.kind}(h={self.h})"
        if not self.intensities.is_uniform:
            base += "/nonuniform"
        return base


def _draw(rng: np.random.Generator, p: IntensityVector, size) -> np.ndarray:
    if p.is_uniform:
        return rng.integers(0, len(p), size=size)
    cdf = np.cumsum(p.probs)
    idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
    return np.minimum(idx, len(p) - 1)


def _uniform_loads(K: int, p: IntensityVector, rng, n: int) -> np.ndarray:
    caches = len(p)
    picks = _draw(rng, p, (n, K))
    flat = picks + (np.arange(n) * caches)[:, None]
    return np.bincount(flat.ravel(), minlength=n * caches).reshape(n, caches)


def _hchoice_loads(K: int, p: IntensityVector, h: int, rng, n: int) -> np.ndarray:
    caches = len(p)
    loads = np.zeros((n, caches), dtype=np.int64)
    rows = np.arange(n)
    col = rows[:, None]
    ids = np.arange(caches)
    if h == caches:
        for _ in range(K):
            loads[rows, np.argmin(loads, axis=1)] += 1
        return loads
    if p.is_uniform:
        # Partial Fisher-Yates on a persistent per-sample permutation: the
        # first h slots are a uniform h-subset whatever the starting order.
        perm = np.tile(ids, (n, 1))
        for _ in range(K):
            for i in range(h):
                j = i + rng.integers(0, caches - i, size=n)
                a = perm[rows, i].copy()
                perm[rows, i] = perm[rows, j]
                perm[rows, j] = a
            cand = perm[:, :h]
            key = loads[col, cand] * caches + cand
            loads[rows, cand[rows, np.argmin(key, axis=1)]] += 1
        return loads
    # Weighted sampling without replacement via exponential keys.
    with np.errstate(divide="ignore"):
        inv_p = np.where(p.probs > 0, 1.0 / p.probs, np.inf)
    for _ in range(K):
        keys = rng.standard_exponential((n, caches)) * inv_p
        cand = np.argpartition(keys, h - 1, axis=1)[:, :h]
        key = loads[col, cand] * caches + cand
        loads[rows, cand[rows, np.argmin(key, axis=1)]] += 1
    return loads


def proximity_blocks(caches: int, h: int) -> np.ndarray:
    """Consecutive blocks of ``h`` cache indices; the last one may be short (padded with -1)."""
    n_blocks = -(-caches // h)
    members = np.full(n_blocks * h, -1, dtype=np.int64)
    members[:caches] = np.arange(caches)
    return members.reshape(n_blocks, h)


def _proximity_loads(K: int, p: IntensityVector, h: int, rng, n: int) -> np.ndarray:
    caches = len(p)
    members = proximity_blocks(caches, h)
    safe = np.where(members >= 0, members, 0)
    block_p = np.where(members >= 0, p.probs[safe], 0.0).sum(axis=1)
    block_p = IntensityVector(block_p / math.fsum(block_p))
    blocks = _draw(rng, block_p, (n, K))
    loads = np.zeros((n, caches), dtype=np.int64)
    rows = np.arange(n)
    big = np.iinfo(np.int64).max
    for k in range(K):
        mem = members[blocks[:, k]]
        ld = np.where(mem >= 0, loads[rows[:, None], safe[blocks[:, k]]], big)
        loads[rows, mem[rows, np.argmin(ld, axis=1)]] += 1
    return loads


def sample_associations(K: int, policy: AssociationPolicy, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` independent population vectors (one per row, unsorted per-cache loads)."""
    if policy.h == 1:
        # Least loaded among a single candidate is just that candidate.
        return _uniform_loads(K, policy.intensities, rng, n)
    if policy.kind == "hchoice":
        return _hchoice_loads(K, policy.intensities, policy.h, rng, n)
    return _proximity_loads(K, policy.intensities, policy.h, rng, n)


def sample_association(K: int, policy: AssociationPolicy, rng: np.random.Generator) -> np.ndarray:
    """One population vector V: users per cache, in cache order."""
    return sample_associations(K, policy, rng, 1)[0]


def chunk_size(K: int, policy: AssociationPolicy) -> int:
    if policy.h == 1:
        n = (1 << 22) // max(K, 1)
    else:
        n = (1 << 20) // policy.caches
    return max(1, min(4096, n))


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, workers)


@dataclass(frozen=True)
class SimulationReport:
    samples: int
    mean: float
    std: float
    se: float
    ci_low: float
    ci_high: float
    seed: int
    policy: str
    rank_loads: tuple[float, ...] = field(repr=False)

    @property
    def ci_half_width(self) -> float:
        return Z_95 * self.se


def _run(cfg: NetworkConfig, policy: AssociationPolicy, n_samples: int, seed: int, workers: int | None):
    if policy.caches != cfg.caches:
        raise ValueError(f"policy is for {policy.caches} caches, instance has {cfg.caches}")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    K = cfg.users
    w = delay_weights(cfg)
    size = chunk_size(K, policy)
    n_chunks = -(-n_samples // size)

    def one(c: int):
        n = min(size, n_samples - c * size)
        loads = sample_associations(K, policy, chunk_rng(seed, c), n)
        ranked = -np.sort(-loads, axis=1)
        return ranked @ w, ranked.sum(axis=0)

    nw = min(worker_count(workers), n_chunks)
    if nw > 1:
        with ThreadPoolExecutor(nw) as pool:
            results = list(pool.map(one, range(n_chunks)))
    else:
        results = [one(c) for c in range(n_chunks)]
    delays = np.concatenate([r[0] for r in results])
    rank_totals = np.sum([r[1] for r in results], axis=0)
    return delays, rank_totals


def sbn_estimate(
    cfg: NetworkConfig,
    policy: AssociationPolicy,
    n_samples: int,
    seed: int,
    workers: int | None = None,
) -> SimulationReport:
    """Sample-mean estimate of the average delay with a normal 95% interval."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    delays, rank_totals = _run(cfg, policy, n_samples, seed, workers)
    mean = math.fsum(delays) / n_samples
    var = math.fsum((delays - mean) ** 2) / (n_samples - 1)
    std = math.sqrt(var)
    se = std / math.sqrt(n_samples)
    return SimulationReport(
        samples=n_samples,
        mean=mean,
        std=std,
        se=se,
        ci_low=mean - Z_95 * se,
        ci_high=mean + Z_95 * se,
        seed=int(seed),
        policy=policy.describe(),
        rank_loads=tuple(float(x) / n_samples for x in rank_totals),
    )


def empirical_rank_loads(
    cfg: NetworkConfig,
    policy: AssociationPolicy,
    n_samples: int,
    seed: int,
    workers: int | None = None,
) -> np.ndarray:
    """Mean sorted load per rank, E[l_1] first."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    _, rank_totals = _run(cfg, policy, n_samples, seed, workers)
    return rank_totals / n_samples


def regime_users(caches: int, regime: str) -> int:
    if regime == "K=L":
        return caches
    if regime == "K=LlnL":
        return max(1, round(caches * math.log(caches)))
    if regime == "K=L^2":
        return caches * caches
    raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")


def scaling_normalizer(caches: int, regime: str, kind: str, h: int = 1) -> float:
    """Predicted growth of G for the regime (base-2 logs); 1 where G stays bounded."""
    if regime != "K=L":
        return 1.0
    log2 = math.log2
    if kind == "hchoice" and h > 1:
        return log2(log2(caches)) / log2(h)
    if kind == "proximity" and h > 1:
        m = caches / h
        return log2(m) / log2(log2(m))
    return log2(caches) / log2(log2(caches))


@dataclass(frozen=True)
class ProbeRow:
    caches: int
    users: int
    t: int
    g_estimate: float
    normalizer: float

    @property
    def ratio(self) -> float:
        return self.g_estimate / self.normalizer


def scaling_probe(
    caches_grid,
    regime: str,
    kind: str = "uniform",
    h: int = 1,
    samples: int = 500,
    seed: int = 0,
    gamma: float = 0.125,
    workers: int | None = None,
) -> list[ProbeRow]:
    """Estimated deterioration G alongside its predicted scaling normaliser."""
    rows = []
    for caches in caches_grid:
        K = regime_users(caches, regime)
        t = min(caches - 1, max(1, round(gamma * caches)))
        cfg = NetworkConfig(K, caches, t)
        policy = AssociationPolicy.make(kind, caches, h)
        rep = sbn_estimate(cfg, policy, samples, seed, workers)
        rows.append(ProbeRow(caches, K, t, rep.mean / t_min(cfg), scaling_normalizer(caches, regime, kind, h)))
    return rows
