"""Exact and log-space combinatorial primitives."""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln

# ln(n!) is summed from exact integer products below this cutoff.
_EXACT_FACTORIAL_CUTOFF = 256
_EXACT_BINOMIAL_MAX_N = 64

DEFAULT_CDF_EPS = 1e-15


@lru_cache(maxsize=1)
def _log_factorial_table() -> tuple[float, ...]:
    table = []
    acc = 1
    for n in range(_EXACT_FACTORIAL_CUTOFF):
        if n > 0:
            acc *= n
        table.append(math.log(acc))
    return tuple(table)


def log_factorial(n: int) -> float:
    """Return ln(n!).

    Exact integer products are used up to a cutoff, lgamma above it.
    """
    if n < 0:
        raise ValueError(f"log_factorial requires n >= 0, got {n}")
    if n < _EXACT_FACTORIAL_CUTOFF:
        return _log_factorial_table()[n]
    return math.lgamma(n + 1)


def log_factorial_array(n_max: int) -> np.ndarray:
    """ln(k!) for k = 0..n_max as a float array."""
    out = gammaln(np.arange(n_max + 1, dtype=float) + 1.0)
    head = min(n_max + 1, _EXACT_FACTORIAL_CUTOFF)
    out[:head] = _log_factorial_table()[:head]
    return out


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k); -inf outside the support."""
    if k < 0 or k > n:
        return -math.inf
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


def binomial(n: int, k: int) -> float | int:
    """C(n, k), zero outside 0 <= k <= n.

    Returns an exact int for n <= 64, otherwise a float obtained from the
    exact big-integer ratio when it fits, else from log space.
    """
    if k < 0 or k > n or n < 0:
        return 0
    if n <= _EXACT_BINOMIAL_MAX_N:
        return math.comb(n, k)
    try:
        return float(math.comb(n, k))
    except OverflowError:
        return math.exp(log_binomial(n, k))


def enumerate_profiles(K: int, caches: int) -> Iterator[tuple[int, ...]]:
    """Yield every partition of ``K`` into at most ``caches`` parts.

    Partitions are zero-padded to length ``caches`` and produced in
    reverse-lexicographic order, starting from ``(K, 0, ..., 0)``.
    """
    if K < 0 or caches < 1:
        raise ValueError(f"need K >= 0 and caches >= 1, got K={K}, caches={caches}")
    a = [0] * caches
    a[0] = K
    yield tuple(a)
    # Index of the last non-zero part.
    last = 0 if K > 0 else -1
    while True:
        # Rightmost part that can be decremented with the remainder still
        # fitting in the positions to its right.
        i = last
        tail = 0
        while i >= 0:
            if a[i] > 1:
                v = a[i] - 1
                rest = tail + 1
                if rest <= v * (caches - 1 - i):
                    break
            tail += a[i]
            i -= 1
        if i < 0:
            return
        v = a[i] - 1
        rest = tail + 1
        a[i] = v
        j = i + 1
        while rest > 0:
            take = v if rest >= v else rest
            a[j] = take
            rest -= take
            j += 1
        last = j - 1
        for k in range(j, caches):
            a[k] = 0
        yield tuple(a)


def count_profiles(K: int, caches: int) -> int:
    """Number of partitions of ``K`` into at most ``caches`` parts."""
    # p(n, k) = p(n, k-1) + p(n-k, k), rolled over k.
    row = [1] + [0] * K
    for k in range(1, caches + 1):
        for n in range(k, K + 1):
            row[n] += row[n - k]
    return row[K]


def multiplicity_groups(loads: Sequence[int]) -> list[int]:
    """Run lengths of equal values in a sorted profile, zeros included."""
    counts: list[int] = []
    prev = None
    for x in loads:
        if counts and x == prev:
            counts[-1] += 1
        else:
            counts.append(1)
            prev = x
    return counts


def _check_probability(p: float) -> None:
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"probability must lie in [0, 1], got {p}")


def _binomial_pmf(K: int, p: float) -> np.ndarray:
    i = np.arange(K + 1, dtype=float)
    lf = log_factorial_array(K)
    log_pmf = lf[K] - lf - lf[::-1] + i * math.log(p) + (K - i) * math.log1p(-p)
    return np.exp(log_pmf)


def binomial_tail_table(K: int, p: float, eps: float = DEFAULT_CDF_EPS) -> np.ndarray:
    """Upper tails Q_j = P[X > j] of X ~ Binomial(K, p) for j = 0..K.

    Terms are formed in log space. Once Q_j drops below ``eps`` the
    remaining entries are reported as 0, i.e. the CDF is saturated at 1.
    """
    _check_probability(p)
    if p == 0.0:
        return np.zeros(K + 1)
    if p == 1.0:
        q = np.ones(K + 1)
        q[K] = 0.0
        return q
    pmf = _binomial_pmf(K, p)
    # Reverse cumulative sum keeps the far tail accurate.
    tail = np.cumsum(pmf[::-1])[::-1]
    q = np.empty(K + 1)
    q[:K] = tail[1:]
    q[K] = 0.0
    np.clip(q, 0.0, 1.0, out=q)
    below = np.nonzero(q < eps)[0]
    if below.size:
        q[below[0]:] = 0.0
    return q


def binomial_cdf_table(K: int, p: float, eps: float = DEFAULT_CDF_EPS) -> np.ndarray:
    """P_j = P[X <= j] for j = 0..K, saturated at 1 once 1 - P_j < eps."""
    q = binomial_tail_table(K, p, eps)
    if 0.0 < p < 1.0:
        # Below the mean the forward cumulative sum is the accurate one.
        head = np.minimum(np.cumsum(_binomial_pmf(K, p)), 1.0)
        cdf = np.where(np.arange(K + 1) < K * p, head, 1.0 - q)
    else:
        cdf = 1.0 - q
    cdf[q == 0.0] = 1.0
    cdf[K] = 1.0
    return cdf


def binomial_cdf(K: int, p: float, j: int, eps: float = DEFAULT_CDF_EPS) -> float:
    """P[X <= j] for X ~ Binomial(K, p); 0 at j = -1 and 1 at j = K."""
    _check_probability(p)
    if j < -1 or j > K:
        raise ValueError(f"j must lie in [-1, K], got j={j}, K={K}")
    if j == -1:
        return 0.0
    if j == K:
        return 1.0
    return float(binomial_cdf_table(K, p, eps)[j])
