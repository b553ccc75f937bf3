"""JSON report schemas and emission.

Every command's report carries ``command`` and ``pass``; the remaining keys
are command specific. Exact rationals are serialised as ``"p/q"`` strings.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction

import jsonschema
import numpy as np

_NUM = {"type": ["number", "null"]}
_RAT = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}
_BOOL = {"type": "boolean"}
_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}


def _obj(required, props=None, extra=True):
    props = dict(props or {})
    props.setdefault("command", {"type": "string"})
    props.setdefault("pass", _BOOL)
    return {"type": "object", "required": ["command", "pass", *required], "properties": props,
            "additionalProperties": extra}


SCHEMAS = {
    "gibbs": _obj(["potential", "support", "sd_residual", "el_residual", "moments"],
                  {"support": _PAIR, "sd_residual": _NUM, "el_residual": _NUM,
                   "moments": {"type": "object", "additionalProperties": {"type": "number"}}}),
    "moment-map": _obj(["target", "source_support", "pushforward_residual", "iterations"],
                       {"source_support": _PAIR, "pushforward_residual": _NUM,
                        "iterations": {"type": "integer"}}),
    "stein": _obj(["target", "discrepancy", "w2", "ws_pass"],
                  {"discrepancy": _NUM, "w2": _NUM, "ws_pass": {"type": ["boolean", "null"]}}),
    "distance": _obj(["a", "b", "w2"], {"w2": _NUM}),
    "convolve": _obj(["a", "b", "support", "mean", "variance"],
                     {"support": _PAIR, "mean": _NUM, "variance": _NUM}),
    "nc": _obj(["action", "result"], {"action": {"type": "string"}}),
    "check": _obj(["check"], {"check": {"type": "string"}}),
    "error": {"type": "object", "required": ["error", "message"],
              "properties": {"error": {"type": "string"}, "message": {"type": "string"}},
              "additionalProperties": True},
}


def _plain(value):
    """Convert numpy scalars, arrays, Fractions and tuples to JSON values."""
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def build_report(command: str, data: dict) -> dict:
    report = _plain({"command": command, **data})
    validate(command, report)
    return report


def validate(command: str, report: dict):
    schema = SCHEMAS[command]
    jsonschema.validate(report, schema)


def error_report(exc: BaseException) -> dict:
    report = {"error": type(exc).__name__, "message": str(exc)}
    jsonschema.validate(report, SCHEMAS["error"])
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False)
