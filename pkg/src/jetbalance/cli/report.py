"""Report records, the JSON schema they follow, and the stdout table."""
from __future__ import annotations

import json
import math
from typing import Any

SCHEMA_VERSION = 1

_number_or_null = {"type": ["number", "null"]}

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "jetbalance report",
    "type": "object",
    "required": ["schema_version", "tool", "version", "command", "model", "timestamp",
                 "status", "exit_code", "errors", "checks", "summary"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": {"const": "jetbalance"},
        "version": {"type": "string"},
        "command": {"type": "string"},
        "model": {"type": "string"},
        "timestamp": {"type": ["string", "null"]},
        "status": {"enum": ["pass", "fail", "input_error"]},
        "exit_code": {"enum": [0, 1, 2]},
        "errors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["location", "message"],
                "additionalProperties": False,
                "properties": {"location": {"type": "string"}, "message": {"type": "string"}},
            },
        },
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "op", "status", "max_residual", "residuals", "argmax",
                             "tol", "expect", "wall_time", "error", "details"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "op": {"type": "string"},
                    "domain": {"type": ["string", "null"]},
                    "status": {"enum": ["PASS", "FAIL", "ERROR"]},
                    "max_residual": _number_or_null,
                    "residuals": {"type": "object", "additionalProperties": _number_or_null},
                    "argmax": {"type": "object", "additionalProperties": {"type": "number"}},
                    "worst": {"type": ["string", "null"]},
                    "tol": {"type": "number", "minimum": 0},
                    "expect": {"enum": ["zero", "nonzero"]},
                    "wall_time": _number_or_null,
                    "error": {"type": ["string", "null"]},
                    "details": {"type": "object"},
                },
            },
        },
        "summary": {
            "type": "object",
            "required": ["total", "passed", "failed"],
            "additionalProperties": False,
            "properties": {k: {"type": "integer", "minimum": 0} for k in ("total", "passed", "failed")},
        },
    },
}


def clean(value):
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if hasattr(value, "item"):
        return clean(value.item())
    return value


def dumps(report: dict) -> str:
    return json.dumps(clean(report), indent=2, allow_nan=False) + "\n"


def table(checks: list[dict]) -> str:
    """Fixed-width summary: name, max_residual, tol, verdict."""
    width = max([len("name")] + [len(c["name"]) for c in checks])
    lines = [f"{'name':<{width}}  {'max_residual':>12}  {'tol':>9}  result"]
    for c in checks:
        r = c["max_residual"]
        rs = "n/a" if r is None else f"{r:.3e}"
        lines.append(f"{c['name']:<{width}}  {rs:>12}  {c['tol']:>9.1e}  {c['status']}")
    return "\n".join(lines) + "\n"
