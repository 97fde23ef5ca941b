"""Desk-scale presets that regenerate the data behind each figure, plus PNG rendering."""
from __future__ import annotations

import json
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import experiments as ex
from .combinatorics import binomial_cdf_table
from .exact import delay_of_profile, t_min
from .network import NetworkConfig
from .output import make_row

FIGURE_IDS = tuple(range(2, 11))


def load_figure2_profiles(path: str | Path | None = None) -> tuple[int, int, list[tuple[int, ...]]]:
    if path is None:
        text = resources.files("cachecalc").joinpath("data/figure2_profiles.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    return int(doc["users"]), int(doc["caches"]), [tuple(int(x) for x in p) for p in doc["profiles"]]


def _label(loads) -> str:
    return "-".join(str(x) for x in loads)


def figure2(seed: int, samples: int | None, profiles_path=None) -> list[dict[str, Any]]:
    """Per-profile delay T(L) across t for a handful of K=40, caches=8 profiles."""
    K, caches, profiles = load_figure2_profiles(profiles_path)
    rows = []
    for loads in profiles:
        for t in range(caches + 1):
            cfg = NetworkConfig(K, caches, t)
            rows.append(make_row(
                command="figure", label=_label(loads), users=K, caches=caches, t=t, gamma=cfg.gamma,
                delay=delay_of_profile(loads, cfg), t_min=t_min(cfg),
            ))
    return rows


def figure3(seed: int, samples: int | None) -> list[dict[str, Any]]:
    """Binomial CDF P_j of a single cache's load (caches=1000, K up to 1e5)."""
    caches = 1000
    rows = []
    for K in (10_000, 100_000):
        cdf = binomial_cdf_table(K, 1.0 / caches)
        mean = K / caches
        hi = int(mean + 8 * np.sqrt(mean)) + 1
        lo = max(0, int(mean - 8 * np.sqrt(mean)))
        for j in range(lo, min(hi, K) + 1):
            rows.append(make_row(command="figure", label=f"K={K}", users=K, caches=caches, j=j, cdf=float(cdf[j])))
    return rows


def _merge(a: dict[str, Any], b: dict[str, Any], keys) -> dict[str, Any]:
    out = dict(a)
    for k in keys:
        if b.get(k) is not None:
            out[k] = b[k]
    errors = [x for x in (a.get("error"), b.get("error")) if x]
    out["error"] = "; ".join(errors) if errors else None
    return out


def _bounds_and_exact(spec: ex.ExperimentSpec) -> list[dict[str, Any]]:
    configs = spec.validate()
    espec = replace(spec, command="exact")

    def one(cfg):
        row = _merge(ex.bounds_row(spec, cfg), ex.exact_row(espec, cfg), ("exact", "g"))
        row["command"] = "figure"
        return row

    return ex._ordered_map(one, configs)


def _with_sbn(spec: ex.ExperimentSpec, label_of: Callable[[ex.ExperimentSpec], str], exact_too: bool) -> list[dict[str, Any]]:
    configs = spec.validate()
    sspec = replace(spec, command="simulate")
    rows = []
    for cfg in configs:
        row = ex.bounds_row(spec, cfg)
        if exact_too:
            row = _merge(row, ex.exact_row(replace(spec, command="exact"), cfg), ("exact", "g"))
        sim = ex.simulate_row(sspec, cfg)
        row = _merge(row, sim, ("samples", "sbn_mean", "sbn_se", "sbn_ci_low", "sbn_ci_high", "sbn_g", "el1"))
        row.update(command="figure", label=label_of(spec))
        rows.append(row)
    return rows


def figure4(seed: int, samples: int | None) -> list[dict[str, Any]]:
    # Above a million profiles the order-statistic route gives the same value far faster.
    spec = ex.ExperimentSpec(
        "bounds", users=[20, 40, 60, 80, 100], caches=[20], t=list(range(11)), method="auto",
        budget=1_000_000,
    )
    return _bounds_and_exact(spec)


def figure5(seed: int, samples: int | None) -> list[dict[str, Any]]:
    spec = ex.ExperimentSpec(
        "bounds", users=[20, 40], caches=[20], t=list(range(7)), method="auto",
        seed=seed, samples=samples or 10_000,
    )
    return _with_sbn(spec, lambda s: "uniform", exact_too=True)


def figure6(seed: int, samples: int | None) -> list[dict[str, Any]]:
    spec = ex.ExperimentSpec("bounds", users=[30, 45], caches=[30], t=list(range(0, 16)), rho=0.95)
    return _bounds_and_exact(spec)


def figure7(seed: int, samples: int | None) -> list[dict[str, Any]]:
    rows = []
    for h in (1, 2, 4, 8):
        spec = ex.ExperimentSpec(
            "bounds", users=[320], caches=[32], t=list(range(0, 17, 2)), policy="proximity", h=h,
            seed=seed, samples=samples or 2_000,
        )
        rows += _with_sbn(spec, lambda s: f"h={s.h}", exact_too=False)
    return rows


def figure8(seed: int, samples: int | None) -> list[dict[str, Any]]:
    spec = ex.ExperimentSpec(
        "bounds", users=[1000, 5000], caches=[100], t=list(range(0, 51, 5)),
        seed=seed, samples=samples or 2_000,
    )
    return _with_sbn(spec, lambda s: "uniform", exact_too=False)


def _zipf_figure(seed: int, samples: int | None) -> list[dict[str, Any]]:
    rows = []
    for alpha in (0.0, 0.5, 1.0, 1.5):
        spec = ex.ExperimentSpec(
            "bounds", users=[100], caches=[20], t=list(range(0, 11)), alpha=alpha,
            seed=seed, samples=samples or 10_000,
        )
        rows += _with_sbn(spec, lambda s: f"alpha={s.alpha:g}", exact_too=False)
    return rows


figure9 = _zipf_figure
figure10 = _zipf_figure

PRESETS: dict[int, Callable[..., list[dict[str, Any]]]] = {
    2: figure2, 3: figure3, 4: figure4, 5: figure5, 6: figure6,
    7: figure7, 8: figure8, 9: figure9, 10: figure10,
}

# (x column, y columns, series column, title)
PLOTS = {
    2: ("gamma", ["delay"], "label", "Delay of individual profiles (K=40, 8 caches)"),
    3: ("j", ["cdf"], "label", "Load CDF of one cache (1000 caches)"),
    4: ("gamma", ["g", "g_aub", "g_alb"], "users", "Exact deterioration and analytical bounds (20 caches)"),
    5: ("gamma", ["g", "sbn_g"], "users", "Exact vs sampled deterioration (20 caches)"),
    6: ("gamma", ["exact", "nlb", "nub"], "users", "Threshold bounds, rho=0.95 (30 caches)"),
    7: ("gamma", ["prox_aub", "sbn_mean"], "label", "Proximity load balancing (K=320, 32 caches)"),
    8: ("gamma", ["aub", "alb", "sbn_mean"], "users", "Bounds vs sampled delay (100 caches)"),
    9: ("gamma", ["nu_aub", "sbn_mean"], "label", "Non-uniform upper bound vs sampled delay (K=100, 20 caches)"),
    10: ("gamma", ["nu_alb", "sbn_mean"], "label", "Non-uniform lower bound vs sampled delay (K=100, 20 caches)"),
}


def run_figure(fig_id: int, seed: int = 1, samples: int | None = None, profiles_path=None) -> list[dict[str, Any]]:
    if fig_id not in PRESETS:
        raise ex.SpecError("figure", f"unknown id {fig_id}; expected one of {FIGURE_IDS}")
    if fig_id == 2:
        rows = figure2(seed, samples, profiles_path)
    else:
        rows = PRESETS[fig_id](seed, samples)
    for r in rows:
        r["command"] = "figure"
        if r.get("label") is None:
            r["label"] = f"fig{fig_id}"
    return rows


def render(fig_id: int, rows: list[dict[str, Any]], path: str | Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xcol, ycols, series, title = PLOTS[fig_id]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    keys = list(dict.fromkeys(r[series] for r in rows))
    styles = ["-", "--", ":", "-."]
    for i, key in enumerate(keys):
        sub = [r for r in rows if r[series] == key]
        for j, y in enumerate(ycols):
            pts = [(r[xcol], r[y]) for r in sub if r[xcol] is not None and r[y] is not None]
            if not pts:
                continue
            xs, ys = zip(*pts)
            ax.plot(xs, ys, styles[j % len(styles)], color=f"C{i % 10}", marker="." if len(xs) < 40 else None,
                    label=f"{y} ({series}={key})" if series != "label" else f"{y} {key}")
    ax.set_xlabel(xcol)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
