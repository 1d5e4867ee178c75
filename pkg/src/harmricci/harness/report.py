"""Deterministic JSON and plain-text rendering of verification reports."""

from __future__ import annotations

import json
import math
import re
from typing import Any

import numpy as np

from ..geometry import TensorValue
from ..solitons import CheckResult, ResidualReport

SCHEMA_VERSION = 1


_FLOAT_TAG = "\x00f17:"
_FLOAT_RE = re.compile(r'"\\u0000f17:([^"]*)"')


def _float_token(x: float) -> str:
    if math.isnan(x):
        text = "NaN"
    elif math.isinf(x):
        text = "Infinity" if x > 0 else "-Infinity"
    else:
        text = "%.17g" % x
        if not any(ch in text for ch in ".en"):
            text += ".0"
    return _FLOAT_TAG + text


def _plain(obj: Any) -> Any:
    """Convert to JSON-ready values, floats wrapped for %.17g output."""
    if isinstance(obj, TensorValue):
        return {"signature": list(obj.signature), "point": _plain(obj.point), "components": _plain(obj.components)}
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float_token(float(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps(doc: dict) -> str:
    """JSON with sorted keys and every float written with 17 significant digits."""
    text = json.dumps(_plain(doc), sort_keys=True, indent=2, ensure_ascii=False)
    return _FLOAT_RE.sub(lambda m: m.group(1), text) + "\n"


def check_dict(check: CheckResult) -> dict:
    return {
        "id": check.check_id,
        "name": check.name,
        "anchor": check.anchor,
        "tolerance": check.tolerance,
        "status": check.status,
        "reason": check.reason,
        "residuals": check.residuals,
        "scales": check.scales,
        "max_residual": check.max_residual,
    }


def manifest_entry(name: str, sha256: str, rep: ResidualReport) -> dict:
    return {
        "name": name,
        "sha256": sha256,
        "checks": [check_dict(c) for c in rep.checks.values()],
        "summary": summarize(rep),
        "parameters": rep.info.get("parameters", {}),
    }


def report_document(command: str, manifests: list[dict], settings: dict) -> dict:
    return {"schema": SCHEMA_VERSION, "command": command, "settings": settings, "manifests": manifests}


def summarize(report: ResidualReport) -> dict:
    counts: dict[str, int] = {}
    for c in report.checks.values():
        counts[c.status] = counts.get(c.status, 0) + 1
    return counts


def render_text(report: ResidualReport) -> str:
    lines = []
    width = max((len(c) for c in report.checks), default=10)
    for c in report.checks.values():
        if c.status in ("N/A", "SKIPPED", "ERROR"):
            lines.append(f"{c.status:<7} {c.check_id:<{width}}  {c.reason}")
        else:
            lines.append(f"{c.status:<7} {c.check_id:<{width}}  max residual {c.max_residual:.3e}  [{c.anchor}]")
    counts = summarize(report)
    lines.append(", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))
    return "\n".join(lines) + "\n"
