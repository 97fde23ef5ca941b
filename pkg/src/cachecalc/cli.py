"""Command-line entry point: ``cachecalc <command> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .exact import DEFAULT_BUDGET
from .experiments import RUNNERS, ExperimentSpec, SpecError, has_errors
from .figures import FIGURE_IDS, render, run_figure
from .output import EmitError, emit, metadata
from .simulation import POLICY_KINDS, REGIMES

EXIT_OK, EXIT_ROW_ERRORS, EXIT_SPEC = 0, 1, 2

DEFAULTS: dict[str, Any] = dict(
    users=None, caches=None, t=None, gamma=None, policy="uniform", h=1, alpha=None, rho=None,
    samples=10_000, seed=None, format="csv", out=None, budget=DEFAULT_BUDGET, method="enumerate",
    regime=None, stamp=False, plot=True, profiles=None,
)


def _int_list(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ":" in part:
            bits = [int(x) for x in part.split(":")]
            lo, hi = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            out.extend(range(lo, hi + 1, step))
        elif part:
            out.append(int(part))
    return out


def _ints(value) -> list[int]:
    if isinstance(value, list):
        return [int(x) for x in value]
    if isinstance(value, int):
        return [value]
    return _int_list(value)


def _users(text):
    if text in ("L", "LlnL", "L^2"):
        return text
    return _ints(text)


def _t(text):
    return "all" if text == "all" else _ints(text)


def _floats(text):
    if isinstance(text, list):
        return [float(x) for x in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(x) for x in str(text).split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cachecalc",
        description="Exact, bounded and simulated average delivery time for shared-cache coded caching.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    # Every option defaults to None so that config-file values can fill the gaps.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML file with default option values")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--out", help="output file (stdout when omitted)")
    common.add_argument("--stamp", action="store_const", const=True, default=None,
                        help="record a UTC timestamp and per-row runtime (breaks byte-identical reruns)")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--users", "-K", help="comma list, lo:hi[:step] ranges, or a rule: L, LlnL, L^2")
    grid.add_argument("--caches", "-L", help="comma list or lo:hi[:step] range")
    grid.add_argument("--t", help="cache-size indices, comma list, range, or 'all'")
    grid.add_argument("--gamma", help="normalised cache sizes t/L, comma list")
    grid.add_argument("--policy", choices=POLICY_KINDS, default=None)
    grid.add_argument("--h", type=int, default=None, help="candidates (hchoice) or block size (proximity)")
    grid.add_argument("--alpha", type=float, default=None, help="Zipf exponent of the cache intensities")
    grid.add_argument("--rho", type=float, default=None, help="probability mass for the threshold bounds")
    grid.add_argument("--samples", type=int, default=None)
    grid.add_argument("--seed", type=int, default=None)
    grid.add_argument("--budget", type=int, default=None, help="maximum number of enumerated profiles")
    grid.add_argument("--method", choices=["enumerate", "order-stats", "auto"], default=None)

    sub.add_parser("exact", parents=[common, grid], help="exact average delay over all profiles")
    sub.add_parser("bounds", parents=[common, grid], help="analytical and threshold bounds")
    sub.add_parser("simulate", parents=[common, grid], help="sampling-based estimate")
    probe = sub.add_parser("probe-scaling", parents=[common, grid], help="G-estimate against its scaling law")
    probe.add_argument("--regime", choices=REGIMES, default=None)
    fig = sub.add_parser("figure", parents=[common], help="regenerate the data of one figure")
    fig.add_argument("id", type=int, choices=FIGURE_IDS)
    fig.add_argument("--seed", type=int, default=None)
    fig.add_argument("--samples", type=int, default=None)
    fig.add_argument("--profiles", help="profiles file for figure 2 (defaults to the shipped one)")
    fig.add_argument("--no-plot", dest="plot", action="store_const", const=False, default=None,
                     help="skip the PNG next to --out")
    return parser


def load_config(path: str | Path) -> dict[str, Any]:
    text = Path(path).read_text()
    if str(path).endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise SpecError("--config", "must hold a mapping of option names to values")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Flags beat the config file, which beats the defaults."""
    values = dict(DEFAULTS)
    if args.config:
        try:
            cfg = load_config(args.config)
        except (OSError, ValueError) as exc:
            raise SpecError("--config", str(exc)) from None
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise SpecError("--config", f"unknown keys {sorted(unknown)}")
        values.update(cfg)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            values[key] = value
    return values


def make_spec(command: str, v: dict[str, Any]) -> ExperimentSpec:
    try:
        users = _users(v["users"]) if v["users"] is not None else []
        caches = _ints(v["caches"]) if v["caches"] is not None else []
        t = _t(v["t"]) if v["t"] is not None else None
        gamma = _floats(v["gamma"]) if v["gamma"] is not None else None
    except ValueError as exc:
        raise SpecError("grid", f"cannot parse: {exc}") from None
    return ExperimentSpec(
        command=command, users=users, caches=caches, t=t, gamma=gamma, policy=v["policy"], h=int(v["h"]),
        alpha=v["alpha"], rho=v["rho"], samples=int(v["samples"]), seed=v["seed"], method=v["method"],
        budget=int(v["budget"]), regime=v["regime"], stamp=bool(v["stamp"]),
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        v = resolve(args)
        if args.command == "figure":
            seed = 1 if v["seed"] is None else v["seed"]
            rows = run_figure(args.id, seed=seed, samples=args.samples,
                              profiles_path=v["profiles"])
        else:
            spec = make_spec(args.command, v)
            seed = spec.seed
            rows = RUNNERS[args.command](spec)
    except SpecError as exc:
        print(f"cachecalc: invalid {exc}", file=sys.stderr)
        return EXIT_SPEC
    try:
        text = emit(rows, v["format"], v["out"], metadata(seed, bool(v["stamp"])))
    except EmitError as exc:
        print(f"cachecalc: {exc}", file=sys.stderr)
        return EXIT_ROW_ERRORS
    if v["out"] is None or v["out"] == "-":
        sys.stdout.write(text)
    elif args.command == "figure" and v["plot"]:
        png = render(args.id, rows, Path(v["out"]).with_suffix(".png"))
        print(f"wrote {v['out']} and {png}", file=sys.stderr)
    for r in rows:
        if r.get("error"):
            print(f"cachecalc: row K={r['users']} L={r['caches']} t={r['t']}: {r['error']}", file=sys.stderr)
    return EXIT_ROW_ERRORS if has_errors(rows) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
