"""Deterministic JSON and CSV serialization.

Floats are written with 17 significant digits, non-finite floats as the
strings ``"inf"``, ``"-inf"`` and ``"nan"``; key order is insertion order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Sequence

import numpy as np

SCHEMA = "ometric/1"


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = "%.17g" % x
    if text == "-0":
        text = "0"
    return text


def _encode(obj: Any, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end_pad = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif hasattr(obj, "to_dict"):
        _encode(obj.to_dict(), indent, level, out)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for k, (key, value) in enumerate(items):
            out.append(pad + json.dumps(str(key), ensure_ascii=False) + ": ")
            _encode(value, indent, level + 1, out)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(end_pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        if all(isinstance(v, (int, float, np.number, str, bool)) or v is None for v in seq):
            parts = []
            for v in seq:
                buf: list = []
                _encode(v, indent, level + 1, buf)
                parts.append("".join(buf))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for k, value in enumerate(seq):
            out.append(pad)
            _encode(value, indent, level + 1, out)
            out.append(",\n" if k < len(seq) - 1 else "\n")
        out.append(end_pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    out: list = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def envelope(command: str, payload: dict) -> dict:
    """Top-level report document with the schema tag first."""
    doc = {"schema": SCHEMA, "command": command}
    doc.update(payload)
    return doc


def _cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()
