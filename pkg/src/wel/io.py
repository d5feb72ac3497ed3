"""Metric-spec loading and report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from . import catalog
from .errors import SpecError
from .metric import MetricChart

_EXPR = {"type": ["string", "number", "null"]}

METRIC_SPEC_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "required": ["builtin"],
            "properties": {
                "builtin": {"type": "string"},
                "params": {"type": "object", "additionalProperties": {"type": "number"}},
                "name": {"type": "string"},
            },
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["dim", "coords", "components", "domain"],
            "properties": {
                "name": {"type": "string"},
                "dim": {"type": "integer", "minimum": 1, "maximum": 4},
                "coords": {"type": "array", "items": {"type": "string"}, "minItems": 1, "maxItems": 4},
                "components": {"type": "array", "items": {"type": "array", "items": _EXPR}},
                "domain": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                },
                "params": {"type": "object", "additionalProperties": {"type": "number"}},
            },
            "additionalProperties": False,
        },
    ]
}


def validate_spec(obj):
    try:
        jsonschema.validate(obj, METRIC_SPEC_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SpecError(f"metric spec does not match the schema: {exc.message}") from None
    if "builtin" in obj:
        return
    n = obj["dim"]
    if len(obj["coords"]) != n or len(obj["domain"]) != n:
        raise SpecError("coords and domain must have dim entries")
    if len(obj["components"]) != n or any(len(r) != n for r in obj["components"]):
        raise SpecError("components must be a dim x dim array")


def chart_from_spec(obj) -> MetricChart:
    """Validated MetricSpec (dict) -> chart."""
    validate_spec(obj)
    if "builtin" in obj:
        return catalog.builtin(obj["builtin"], obj.get("params"))
    return MetricChart.from_expressions(obj["coords"], obj["components"], obj["domain"],
                                        params=obj.get("params"), label=obj.get("name", ""))


def load_spec(text_or_path):
    """A path to a JSON file, or inline JSON text."""
    s = str(text_or_path).strip()
    if s.startswith("{"):
        raw = s
    else:
        p = Path(s)
        if not p.is_file():
            raise SpecError(f"no such spec file: {s}")
        raw = p.read_text()
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from None


# --------------------------------------------------------------------------- numbers


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return "null"
    if x == 0:
        return "0.0"
    out = format(x, ".17g")
    return out if any(ch in out for ch in ".e") else out + ".0"


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(obj, indent=2, _level=0) -> str:
    """JSON text with every float written to 17 significant digits."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(_plain(v), (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_float(v) if isinstance(_plain(v), float) else _plain(v) for v in r])
    return buf.getvalue()


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
