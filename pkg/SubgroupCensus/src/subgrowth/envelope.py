"""
Result envelopes shared by the CLI and the HTTP surface.

    {"schema": 1, "command": ..., "ok": true, "inputs": {...},
     "outputs": {...}, "provenance": {quantity: formula}, "timing_ms": ...}

Every top-level numeric output names the formula it came from in provenance.

JSON is written with sorted keys. CSV flattens the first tabular output
(a list of flat dicts) or, failing that, the scalar outputs as one row.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import InvalidArgument

SCHEMA_VERSION = 1
REQUIRED_KEYS = ("schema", "command", "ok", "inputs", "outputs", "provenance", "timing_ms")


def jsonable(value: Any) -> Any:
    """Convert Fractions, numpy scalars/arrays, Paths and nested containers."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [jsonable(v) for v in items]
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else value.numerator
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    return value


@dataclass
class ResultEnvelope:
    command: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, Any] = field(default_factory=dict)
    provenance: Dict[str, str] = field(default_factory=dict)
    ok: bool = True
    error: Optional[Dict[str, Any]] = None
    timing_ms: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "ok": self.ok,
            "inputs": jsonable(self.inputs),
            "outputs": jsonable(self.outputs),
            "provenance": dict(sorted(self.provenance.items())),
            "timing_ms": round(self.timing_ms, 3),
        }
        if self.error is not None:
            data["error"] = jsonable(self.error)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    def to_csv(self) -> str:
        outputs = jsonable(self.outputs)
        rows = _tabular(outputs)
        if rows is None:
            rows = [{k: v for k, v in sorted(outputs.items()) if not isinstance(v, (dict, list))}]
        columns: List[str] = []
        for row in rows:
            for k in row:
                if k not in columns:
                    columns.append(k)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in columns})
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        return self.to_json()


def _tabular(outputs: Dict[str, Any]) -> Optional[List[dict]]:
    for key in sorted(outputs):
        value = outputs[key]
        if isinstance(value, list) and value and all(isinstance(r, dict) for r in value):
            return value
    return None


def _cell(value: Any) -> Any:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return value


class Timer:
    def __enter__(self) -> "Timer":
        self._start = time.perf_counter()
        self.ms = 0.0
        return self

    def __exit__(self, *exc) -> None:
        self.ms = (time.perf_counter() - self._start) * 1000.0


def error_envelope(command: str, inputs: Dict[str, Any], exc: BaseException) -> ResultEnvelope:
    error: Dict[str, Any] = {"type": type(exc).__name__, "message": str(exc)}
    partial = getattr(exc, "partial", None)
    if partial is not None:
        error["partial"] = partial
    diagnostics = getattr(exc, "diagnostics", None)
    if diagnostics is not None:
        error["diagnostics"] = diagnostics
    return ResultEnvelope(command=command, inputs=inputs, ok=False, error=error)


def validate(obj: Any) -> Dict[str, Any]:
    """Check an envelope (dict or JSON text) and return it as a dict."""
    if isinstance(obj, (str, bytes)):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as e:
            raise InvalidArgument(f"envelope is not valid JSON: {e}") from e
    if isinstance(obj, ResultEnvelope):
        obj = obj.to_dict()
    if not isinstance(obj, dict):
        raise InvalidArgument("envelope must be a JSON object")
    missing = [k for k in REQUIRED_KEYS if k not in obj]
    if missing:
        raise InvalidArgument(f"envelope missing keys: {missing}")
    if obj["schema"] != SCHEMA_VERSION:
        raise InvalidArgument(f"unsupported envelope schema {obj['schema']!r}")
    if not isinstance(obj["inputs"], dict) or not isinstance(obj["outputs"], dict):
        raise InvalidArgument("inputs and outputs must be objects")
    if not isinstance(obj["provenance"], dict):
        raise InvalidArgument("provenance must be an object")
    if not obj["ok"] and "error" not in obj:
        raise InvalidArgument("failed envelope carries no error")
    unexplained = [
        k for k, v in obj["outputs"].items()
        if isinstance(v, (int, float)) and not isinstance(v, bool) and k not in obj["provenance"]
    ]
    if unexplained:
        raise InvalidArgument(f"numeric outputs without provenance: {sorted(unexplained)}")
    # re-serialising must reproduce the same document
    if json.loads(json.dumps(obj, sort_keys=True)) != obj:
        raise InvalidArgument("envelope does not round-trip through JSON")
    return obj
