"""Problem instances, cache intensities and the per-rank delay weights."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class NetworkConfig:
    """K users, ``caches`` shared caches, cache redundancy ``t`` (t = caches * gamma)."""

    users: int
    caches: int
    t: int

    def __post_init__(self):
        for name in ("users", "caches", "t"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {value!r}")
        if self.users < 1:
            raise ValueError(f"users must be >= 1, got {self.users}")
        if self.caches < 1:
            raise ValueError(f"caches must be >= 1, got {self.caches}")
        if not 0 <= self.t <= self.caches:
            raise ValueError(f"t must lie in [0, caches={self.caches}], got {self.t}")

    @classmethod
    def from_gamma(cls, users: int, caches: int, gamma: float) -> "NetworkConfig":
        t = gamma * caches
        if abs(t - round(t)) > 1e-9:
            raise ValueError(f"gamma={gamma} does not give an integer t for caches={caches}")
        return cls(users, caches, int(round(t)))

    @property
    def gamma(self) -> float:
        return self.t / self.caches

    @property
    def no_coded_gain(self) -> bool:
        return self.t == 0

    @property
    def worst_delay(self) -> float:
        """K(1 - gamma): every user on a single cache."""
        return self.users * (self.caches - self.t) / self.caches


@lru_cache(maxsize=256)
def _weights(caches: int, t: int) -> tuple[float, ...]:
    denom = math.comb(caches, t)
    return tuple(math.comb(caches - lam, t) / denom for lam in range(1, caches + 1))


def delay_weights(cfg: NetworkConfig) -> np.ndarray:
    """C(caches - rank, t) / C(caches, t) for rank = 1..caches.

    Ranks beyond caches - t get weight zero.
    """
    return np.array(_weights(cfg.caches, cfg.t))


@dataclass(frozen=True)
class IntensityVector:
    """Per-cache association probabilities."""

    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("intensities must be a non-empty 1-d vector")
        if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
            raise ValueError("intensities must lie in [0, 1]")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError(f"intensities must sum to 1, got {math.fsum(p)!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, caches: int) -> "IntensityVector":
        return cls(np.full(caches, 1.0 / caches))

    @classmethod
    def zipf(cls, caches: int, alpha: float) -> "IntensityVector":
        return zipf_intensities(caches, alpha)

    def __len__(self) -> int:
        return self.probs.size

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.probs == self.probs[0]))

    @property
    def max(self) -> float:
        return float(self.probs.max())


def zipf_intensities(caches: int, alpha: float) -> IntensityVector:
    """p_k = k^-alpha / H_alpha(caches), non-increasing in k."""
    if caches < 1:
        raise ValueError(f"caches must be >= 1, got {caches}")
    if alpha < 0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be a finite non-negative number, got {alpha}")
    if alpha == 0:
        return IntensityVector.uniform(caches)
    w = np.arange(1, caches + 1, dtype=float) ** (-alpha)
    harmonic = math.fsum(w)
    return IntensityVector(w / harmonic)
