"""JSON-lines iteration traces.

One object per recorded iterate, then a summary line::

    {"k": 0, "x": [...], "lambda_h": [], "lambda_g_sq": [...], ..., "complementarity": 0.0}
    {"termination": "StepTolerance", "iterations": 8, "x_tilde": [...]}

Floats are written with 17 significant digits so a re-read trace reproduces
the in-memory doubles exactly. Non-finite values are written as ``null``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import IoFailure
from .results import IterateRecord

ITERATE_KEYS = (
    "k", "x", "lambda_h", "lambda_g_sq", "lambda_g_sq_raw", "active",
    "step_norm", "stationarity", "feasibility", "complementarity",
)


def dumps(obj) -> str:
    """Compact JSON with floats at 17 significant digits and NaN/inf as ``null``."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return json.dumps(obj if not isinstance(obj, np.bool_) else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    v = float(obj)
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def iterate_line(rec: IterateRecord) -> dict:
    line = {
        "k": rec.k,
        "x": rec.x,
        "lambda_h": rec.lambda_h,
        "lambda_g_sq": rec.lambda_g_sq,
        "lambda_g_sq_raw": rec.lambda_g_sq_raw,
        "active": list(rec.active),
        "step_norm": rec.step_norm,
        "stationarity": rec.kkt.stationarity,
        "feasibility": rec.kkt.feasibility,
        "complementarity": rec.kkt.complementarity,
    }
    if rec.kkt.equality:
        line["equality"] = rec.kkt.equality
    if rec.least_squares:
        line["least_squares"] = True
    return line


def summary_line(report) -> dict:
    return {
        "termination": str(report.termination),
        "iterations": report.iterations,
        "x_tilde": report.x_tilde,
    }


def format_trace(report) -> str:
    lines = [dumps(iterate_line(r)) for r in report.iterates]
    lines.append(dumps(summary_line(report)))
    return "\n".join(lines) + "\n"


def write_trace(report, path) -> None:
    """Write ``report`` to ``path`` as JSON lines.

    Raises:
        IoFailure: when the file cannot be written.
    """
    try:
        Path(path).write_text(format_trace(report), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write trace {path}: {exc}") from exc


def read_trace(path) -> tuple[list[dict], dict]:
    """Parse a trace file into ``(iterate_lines, summary)``.

    Raises:
        IoFailure: when the file is unreadable or malformed.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read trace {path}: {exc}") from exc
    try:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    except json.JSONDecodeError as exc:
        raise IoFailure(f"malformed trace {path}: {exc}") from exc
    if not rows or "termination" not in rows[-1]:
        raise IoFailure(f"trace {path} has no summary line")
    return rows[:-1], rows[-1]
