"""Canonical JSON emission for reproducible run outputs.

Identical inputs must produce byte-identical files, so numbers are
serialized with a fixed convention: integers verbatim, everything else at
12 significant digits (%.12g). Dict keys keep their insertion order --
report builders construct them in a fixed schema order. NaN and infinity
are not representable and serialize as null.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path


def format_number(value: float) -> str:
    """Fixed 12-significant-digit rendering used in all outputs."""
    v = float(value)
    if v == 0.0:
        v = 0.0  # normalize -0.0
    return format(v, ".12g")


def _emit(obj, out: list[str]) -> None:
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, (float, Fraction)):
        v = float(obj)
        if not math.isfinite(v):
            out.append("null")
        else:
            out.append(format_number(v))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(":")
            _emit(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} canonically")


def dumps(obj) -> str:
    out: list[str] = []
    _emit(obj, out)
    return "".join(out)


def write_json(path, obj) -> None:
    Path(path).write_bytes((dumps(obj) + "\n").encode("utf-8"))
