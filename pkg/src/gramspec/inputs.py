"""Reading quartic input files and writing them back canonically.

Two formats are accepted.  A JSON object holds either the 15 exponent keys
directly or a ``coefficients`` object with optional ``seed`` and
``tolerances`` members.  A plain-text file holds ``key = value`` lines,
with ``#`` comments and ``tolerance.<name>`` keys for overrides::

    # Fermat quartic
    400 = 1
    040 = 1
    004 = 1
    310 = 0
    ...
    seed = 7
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .config import Tolerances
from .errors import InputError
from .forms import TernaryForm, exponent_key, monomials

EXPONENT_KEYS = tuple(exponent_key(m) for m in monomials(4))
TOLERANCE_NAMES = tuple(f.name for f in fields(Tolerances))


class ParseError(InputError):
    """Malformed input file; the message names the offending line or key."""


@dataclass(frozen=True)
class QuarticInput:
    coefficients: dict[str, float]
    seed: int | None = None
    tolerances: dict[str, float] = field(default_factory=dict)

    @property
    def form(self) -> TernaryForm:
        return TernaryForm.from_terms(4, self.coefficients)

    def resolved_tolerances(self, base: Tolerances | None = None) -> Tolerances:
        return (base or Tolerances()).with_overrides(**self.tolerances)

    def to_document(self) -> dict:
        doc: dict = {"coefficients": {k: float(self.coefficients[k]) for k in EXPONENT_KEYS}}
        if self.seed is not None:
            doc["seed"] = int(self.seed)
        if self.tolerances:
            doc["tolerances"] = {k: float(v) for k, v in sorted(self.tolerances.items())}
        return doc


def _number(value, where: str) -> float:
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ParseError(f"{where}: value {value!r} is not finite")
    return x


def _seed(value, where: str) -> int:
    x = _number(value, where)
    if x != int(x) or x < 0:
        raise ParseError(f"{where}: seed must be a non-negative integer, got {value!r}")
    return int(x)


def _build(coeffs: dict, seed, tols: dict, context: dict[str, str]) -> QuarticInput:
    missing = [k for k in EXPONENT_KEYS if k not in coeffs]
    if missing:
        raise ParseError(f"missing coefficient key(s): {', '.join(repr(k) for k in missing)}")
    out = {k: _number(coeffs[k], context.get(k, f"key {k!r}")) for k in EXPONENT_KEYS}
    parsed_tols = {}
    for name, v in tols.items():
        where = context.get(f"tolerance.{name}", f"tolerance {name!r}")
        if name not in TOLERANCE_NAMES:
            raise ParseError(f"{where}: unknown tolerance {name!r}")
        x = _number(v, where)
        if x <= 0:
            raise ParseError(f"{where}: tolerance must be positive")
        parsed_tols[name] = x
    s = None if seed is None else _seed(seed, context.get("seed", "key 'seed'"))
    return QuarticInput(out, s, parsed_tols)


def _parse_json(text: str) -> QuarticInput:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    if "coefficients" in doc:
        coeffs = doc["coefficients"]
        if not isinstance(coeffs, dict):
            raise ParseError("key 'coefficients': expected an object")
        extra = set(doc) - {"coefficients", "seed", "tolerances"}
    else:
        coeffs = {k: v for k, v in doc.items() if k not in ("seed", "tolerances")}
        extra = set()
    unknown = sorted(extra | (set(coeffs) - set(EXPONENT_KEYS)))
    if unknown:
        raise ParseError(f"unknown key {unknown[0]!r}")
    tols = doc.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ParseError("key 'tolerances': expected an object")
    return _build(coeffs, doc.get("seed"), tols, {})


def _parse_lines(text: str) -> QuarticInput:
    coeffs, tols, context = {}, {}, {}
    seed = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {n}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        where = f"line {n}, key {key!r}"
        if key in context:
            raise ParseError(f"{where}: duplicate key")
        context[key] = where
        if key in EXPONENT_KEYS:
            coeffs[key] = value
        elif key == "seed":
            seed = value
        elif key.startswith("tolerance."):
            tols[key.split(".", 1)[1]] = value
        else:
            raise ParseError(f"{where}: unknown key")
    return _build(coeffs, seed, tols, context)


def parse_quartic(text: str) -> QuarticInput:
    """Parse either supported input format."""
    if text.lstrip().startswith(("{", "[")):
        return _parse_json(text)
    return _parse_lines(text)


def read_quartic(path) -> QuarticInput:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_quartic(text)


def quartic_input(f: TernaryForm, seed: int | None = None) -> QuarticInput:
    if not f.is_real():
        raise InputError("input quartics must be real")
    return QuarticInput({k: float(v.real) for k, v in f.terms().items()}, seed)
