"""Result rows and CSV/JSON emission."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__

# Fixed column order shared by every command; unused fields stay null.
INPUT_FIELDS = ["command", "label", "users", "caches", "t", "gamma", "policy", "h", "alpha", "rho", "seed", "samples"]
METRIC_FIELDS = [
    "exact", "t_min", "g",
    "aub", "alb", "g_aub", "g_alb",
    "nlb", "nub", "rho_realized",
    "prox_aub", "nu_aub", "nu_alb",
    "sbn_mean", "sbn_se", "sbn_ci_low", "sbn_ci_high", "sbn_g", "el1",
    "delay", "j", "cdf", "normalizer", "ratio",
    "runtime_ms",
]
TEXT_FIELDS = ["note", "error"]
COLUMNS = INPUT_FIELDS + METRIC_FIELDS + TEXT_FIELDS


class EmitError(OSError):
    pass


def make_row(**values: Any) -> dict[str, Any]:
    unknown = set(values) - set(COLUMNS)
    if unknown:
        raise KeyError(f"unknown result fields: {sorted(unknown)}")
    row = {c: None for c in COLUMNS}
    for key, value in values.items():
        if isinstance(value, np.generic):
            value = value.item()
        row[key] = value
    for key in METRIC_FIELDS:
        v = row[key]
        if v is not None and (not math.isfinite(v) or v < 0):
            raise ValueError(f"metric {key}={v!r} must be finite and non-negative")
    return row


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return np.format_float_positional(value, precision=12, unique=False, fractional=False, trim="-")
    return str(value)


def to_csv(rows: Iterable[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_format(row.get(c)) for c in COLUMNS])
    return buf.getvalue()


def metadata(seed: int | None = None, stamp: bool = False) -> dict[str, Any]:
    """Run metadata; the timestamp is only recorded on request so that
    repeated runs produce identical bytes (SOURCE_DATE_EPOCH is honoured)."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        ts = datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    elif stamp:
        ts = datetime.now(timezone.utc).isoformat()
    else:
        ts = None
    return {"tool": "cachecalc", "version": __version__, "seed": seed, "timestamp": ts}


def to_json(rows: Iterable[dict[str, Any]], meta: dict[str, Any]) -> str:
    payload = [meta] + [{c: row.get(c) for c in COLUMNS} for row in rows]
    return json.dumps(payload, indent=1, allow_nan=False) + "\n"


def read_json(text: str) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    payload = json.loads(text)
    return payload[0], payload[1:]


def emit(rows: Iterable[dict[str, Any]], fmt: str, path: str | Path | None, meta: dict[str, Any] | None = None) -> str:
    """Render rows as csv or json and write them to ``path`` (stdout when None)."""
    rows = list(rows)
    if fmt == "csv":
        text = to_csv(rows)
    elif fmt == "json":
        text = to_json(rows, meta if meta is not None else metadata())
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is None or str(path) == "-":
        return text
    target = Path(path)
    try:
        if target.parent and not target.parent.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise EmitError(f"cannot write {target}: {exc.strerror or exc}") from exc
    return text
