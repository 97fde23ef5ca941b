"""Parameter grids and the row producers behind the CLI commands."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from . import bounds, exact
from .network import IntensityVector, NetworkConfig, zipf_intensities
from .output import make_row
from .simulation import (
    POLICY_KINDS,
    REGIMES,
    AssociationPolicy,
    regime_users,
    sbn_estimate,
    scaling_normalizer,
    t_min,
    worker_count,
)

USER_RULES = {"L": "K=L", "LlnL": "K=LlnL", "L^2": "K=L^2"}


class SpecError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass
class ExperimentSpec:
    command: str
    users: list[int] | str = field(default_factory=list)
    caches: list[int] = field(default_factory=list)
    t: list[int] | str | None = None
    gamma: list[float] | None = None
    policy: str = "uniform"
    h: int = 1
    alpha: float | None = None
    rho: float | None = None
    samples: int = 10_000
    seed: int | None = None
    method: str = "enumerate"
    budget: int = exact.DEFAULT_BUDGET
    regime: str | None = None
    stamp: bool = False

    def validate(self) -> list[NetworkConfig]:
        """Check every field and expand the grid; raises SpecError on the first problem."""
        if not self.caches:
            raise SpecError("--caches", "at least one cache count is required")
        if any(c < 1 for c in self.caches):
            raise SpecError("--caches", "cache counts must be >= 1")
        if self.policy not in POLICY_KINDS:
            raise SpecError("--policy", f"must be one of {', '.join(POLICY_KINDS)}")
        if self.policy != "uniform" and self.h < 1:
            raise SpecError("--h", "must be >= 1")
        if self.alpha is not None and (self.alpha < 0 or not math.isfinite(self.alpha)):
            raise SpecError("--alpha", "must be a finite non-negative number")
        if self.rho is not None and not 0 < self.rho <= 1:
            raise SpecError("--rho", "must lie in (0, 1]")
        if self.samples < 2:
            raise SpecError("--samples", "must be >= 2")
        if self.budget < 1:
            raise SpecError("--budget", "must be >= 1")
        if self.method not in ("enumerate", "order-stats", "auto"):
            raise SpecError("--method", "must be enumerate, order-stats or auto")
        if self.command in ("simulate", "probe-scaling"):
            if self.seed is None:
                raise SpecError("--seed", f"is mandatory for {self.command}")
            if self.seed < 0:
                raise SpecError("--seed", "must be non-negative")
        if self.command == "probe-scaling":
            if self.regime not in REGIMES:
                raise SpecError("--regime", f"must be one of {', '.join(REGIMES)}")
            if self.gamma is not None and len(self.gamma) != 1:
                raise SpecError("--gamma", "probe-scaling takes a single gamma")
            for c in self.caches:
                if c < 4:
                    raise SpecError("--caches", "probe needs caches >= 4 (log log must be positive)")
                if self.policy != "uniform" and self.h > c:
                    raise SpecError("--h", f"exceeds caches={c}")
            return []
        if self.t is not None and self.gamma is not None:
            raise SpecError("--t", "give either --t or --gamma, not both")
        if self.t is None and self.gamma is None:
            raise SpecError("--t", "one of --t or --gamma is required")
        configs = []
        for caches in self.caches:
            if self.policy != "uniform" and self.h > caches:
                raise SpecError("--h", f"exceeds caches={caches}")
            for K in self._users_for(caches):
                for t in self._t_for(caches):
                    try:
                        configs.append(NetworkConfig(K, caches, t))
                    except (TypeError, ValueError) as exc:
                        raise SpecError("--users/--t", str(exc)) from None
        return configs

    def _users_for(self, caches: int) -> list[int]:
        if isinstance(self.users, str):
            if self.users not in USER_RULES:
                raise SpecError("--users", f"unknown rule {self.users!r}; use a list or one of {', '.join(USER_RULES)}")
            return [regime_users(caches, USER_RULES[self.users])]
        if not self.users:
            raise SpecError("--users", "at least one user count is required")
        if any(k < 1 for k in self.users):
            raise SpecError("--users", "user counts must be >= 1")
        return list(self.users)

    def _t_for(self, caches: int) -> list[int]:
        if self.t == "all":
            return list(range(caches + 1))
        if self.t is not None:
            bad = [t for t in self.t if not 0 <= t <= caches]
            if bad:
                raise SpecError("--t", f"values {bad} outside [0, {caches}]")
            return list(self.t)
        out = []
        for g in self.gamma or []:
            x = g * caches
            if abs(x - round(x)) > 1e-9 or not 0 <= g <= 1:
                raise SpecError("--gamma", f"gamma={g} gives non-integer t for caches={caches}")
            out.append(int(round(x)))
        return out

    def intensities(self, caches: int) -> IntensityVector:
        if self.alpha:
            return zipf_intensities(caches, self.alpha)
        return IntensityVector.uniform(caches)

    def echo(self, cfg: NetworkConfig) -> dict[str, Any]:
        return dict(
            command=self.command,
            users=cfg.users,
            caches=cfg.caches,
            t=cfg.t,
            gamma=cfg.gamma,
            policy=self.policy,
            h=self.h if self.policy != "uniform" else None,
            alpha=self.alpha,
            rho=self.rho,
            seed=self.seed,
            samples=self.samples if self.command == "simulate" else None,
        )


def _timed(spec: ExperimentSpec, fn: Callable[[], dict[str, Any]]) -> dict[str, Any]:
    start = time.perf_counter()
    values = fn()
    if spec.stamp:
        values["runtime_ms"] = (time.perf_counter() - start) * 1e3
    return values


def _note(cfg: NetworkConfig) -> str | None:
    return "no coded gain (t=0)" if cfg.no_coded_gain else None


def _ordered_map(fn, items: list) -> list:
    n = min(worker_count(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


def exact_row(spec: ExperimentSpec, cfg: NetworkConfig) -> dict[str, Any]:
    def compute():
        best = t_min(cfg)
        try:
            value = exact.average_delay(cfg, spec.budget, spec.method)
        except exact.EnumerationBudgetExceeded as exc:
            return dict(t_min=best, error=str(exc))
        g = 1.0 if cfg.t == cfg.caches else value / best
        return dict(exact=value, t_min=best, g=g)

    return make_row(**spec.echo(cfg), note=_note(cfg), **_timed(spec, compute))


def run_exact(spec: ExperimentSpec) -> list[dict[str, Any]]:
    configs = spec.validate()
    return _ordered_map(lambda cfg: exact_row(spec, cfg), configs)


def _ratio(value: float | None, best: float, cfg: NetworkConfig) -> float | None:
    if value is None:
        return None
    if cfg.t == cfg.caches:
        return 1.0
    return value / best


def bounds_row(spec: ExperimentSpec, cfg: NetworkConfig) -> dict[str, Any]:
    def compute():
        errors = []
        best = t_min(cfg)
        out: dict[str, Any] = dict(t_min=best, aub=bounds.analytical_upper_bound(cfg))
        if cfg.caches >= 2:
            out["alb"] = bounds.analytical_lower_bound(cfg)
        else:
            errors.append("lower bounds need caches >= 2")
        out["g_aub"] = _ratio(out["aub"], best, cfg)
        out["g_alb"] = _ratio(out.get("alb"), best, cfg)
        if spec.rho is not None:
            tb = bounds.threshold_bounds(cfg, spec.rho, spec.budget)
            out.update(nlb=tb.lower, nub=tb.upper, rho_realized=tb.coverage)
            if tb.warning:
                out["note"] = tb.warning
        if spec.alpha is not None:
            p = spec.intensities(cfg.caches)
            out["nu_aub"] = bounds.nonuniform_upper_bound(cfg, p)
            if cfg.caches >= 2:
                out["nu_alb"] = bounds.nonuniform_lower_bound(cfg, p)
        if spec.policy == "proximity":
            out["prox_aub"] = bounds.proximity_upper_bound(cfg, spec.h)
        if errors:
            out["error"] = "; ".join(errors)
        return out

    values = _timed(spec, compute)
    values.setdefault("note", _note(cfg))
    return make_row(**spec.echo(cfg), **values)


def run_bounds(spec: ExperimentSpec) -> list[dict[str, Any]]:
    configs = spec.validate()
    return _ordered_map(lambda cfg: bounds_row(spec, cfg), configs)


def simulate_row(spec: ExperimentSpec, cfg: NetworkConfig) -> dict[str, Any]:
    def compute():
        policy = AssociationPolicy(spec.policy, spec.intensities(cfg.caches), spec.h if spec.policy != "uniform" else 1)
        rep = sbn_estimate(cfg, policy, spec.samples, spec.seed)
        best = t_min(cfg)
        return dict(
            t_min=best,
            sbn_mean=rep.mean,
            sbn_se=rep.se,
            sbn_ci_low=max(rep.ci_low, 0.0),
            sbn_ci_high=rep.ci_high,
            sbn_g=_ratio(rep.mean, best, cfg),
            el1=rep.rank_loads[0],
        )

    return make_row(**spec.echo(cfg), note=_note(cfg), **_timed(spec, compute))


def run_simulate(spec: ExperimentSpec) -> list[dict[str, Any]]:
    configs = spec.validate()
    # Sampling is already parallel inside each grid point.
    return [simulate_row(spec, cfg) for cfg in configs]


def run_probe(spec: ExperimentSpec) -> list[dict[str, Any]]:
    spec.validate()
    gamma = spec.gamma[0] if spec.gamma else 0.125
    rows = []
    for caches in spec.caches:
        K = regime_users(caches, spec.regime)
        t = min(caches - 1, max(1, round(gamma * caches)))
        cfg = NetworkConfig(K, caches, t)

        def compute():
            policy = AssociationPolicy(spec.policy, spec.intensities(caches), spec.h if spec.policy != "uniform" else 1)
            rep = sbn_estimate(cfg, policy, spec.samples, spec.seed)
            best = t_min(cfg)
            g = rep.mean / best
            norm = scaling_normalizer(caches, spec.regime, spec.policy, spec.h)
            return dict(t_min=best, sbn_mean=rep.mean, sbn_se=rep.se, sbn_g=g, normalizer=norm, ratio=g / norm)

        echo = spec.echo(cfg)
        echo["samples"] = spec.samples
        rows.append(make_row(**echo, label=spec.regime, **_timed(spec, compute)))
    return rows


RUNNERS: dict[str, Callable[[ExperimentSpec], list[dict[str, Any]]]] = {
    "exact": run_exact,
    "bounds": run_bounds,
    "simulate": run_simulate,
    "probe-scaling": run_probe,
}


def has_errors(rows: Iterable[dict[str, Any]]) -> bool:
    return any(r.get("error") for r in rows)
