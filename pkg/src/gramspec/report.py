"""Canonical text serialization of reports and slice tables.

Documents are JSON with sorted keys and two-space indentation.  Every float
is written with 17 significant digits in exponent form, negative zero is
written as zero, and complex numbers become ``[re, im]`` pairs.  Equal
inputs therefore give byte-identical files.
"""
from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .errors import InputError


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        x = 0.0
    return f"{x:.16e}"


def _plain(obj: Any) -> Any:
    """Convert numpy and complex values to nested lists, dicts and scalars."""
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.complexfloating, complex)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    raise InputError(f"cannot serialize value of type {type(obj).__name__}")


def _emit(obj: Any, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items())
        for k, (key, v) in enumerate(items):
            out.append(f"{pad}  {json.dumps(key)}: ")
            _emit(v, indent + 1, out)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[")
            for k, v in enumerate(obj):
                _emit(v, indent, out)
                if k < len(obj) - 1:
                    out.append(", ")
            out.append("]")
        else:
            out.append("[\n")
            for k, v in enumerate(obj):
                out.append(pad + "  ")
                _emit(v, indent + 1, out)
                out.append(",\n" if k < len(obj) - 1 else "\n")
            out.append(pad + "]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    else:
        out.append(json.dumps(obj))


def dumps(obj: Any) -> str:
    """Canonical document text, newline-terminated."""
    out: list[str] = []
    _emit(_plain(obj), 0, out)
    return "".join(out) + "\n"


SLICE_COLUMNS = ("lambda1", "lambda2", "lambda3", "det", "lambda_min")


def slice_table(rows: np.ndarray) -> str:
    """Comma-separated slice table with a header line."""
    lines = [",".join(SLICE_COLUMNS)]
    for row in np.asarray(rows, dtype=float):
        lines.append(",".join(format_float(x) for x in row))
    return "\n".join(lines) + "\n"


def read_slice_table(text: str) -> np.ndarray:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or tuple(lines[0].split(",")) != SLICE_COLUMNS:
        raise InputError("not a slice table")
    return np.array([[float(x) for x in l.split(",")] for l in lines[1:]]).reshape(-1, len(SLICE_COLUMNS))
