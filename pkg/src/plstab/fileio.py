"""Density and triple files in canonical JSON syntax.

Canonical form: keys sorted, floats written with 17 significant digits,
no insignificant whitespace beyond a single space after separators.  Parsing
a canonical file and emitting it again reproduces the same bytes.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Optional, Union

from .density import LogConcaveDensity, LogConcaveFunction, PiecewiseLogLinear
from .errors import ParseError, PLStabError
from .midpoint import PLTriple

DENSITY_KEYS = ("knots", "logvals", "left_tail_slope", "right_tail_slope", "normalized")


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x}")
    text = format(x, ".17g")
    if re.fullmatch(r"-?\d+", text):
        text += ".0"
    return text


def canonical_dumps(obj) -> str:
    """Serialise nested dicts/lists/floats/bools/None canonically."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, float)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {canonical_dumps(obj[k])}" for k in sorted(obj))
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(canonical_dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def density_to_dict(d: PiecewiseLogLinear) -> dict:
    return {
        "knots": list(d.knots),
        "logvals": list(d.logvals),
        "left_tail_slope": d.left_tail_slope,
        "right_tail_slope": d.right_tail_slope,
        "normalized": bool(getattr(d, "normalized", False)),
    }


def triple_to_dict(t: PLTriple) -> dict:
    return {"m": density_to_dict(t.m), "f": density_to_dict(t.f), "g": density_to_dict(t.g), "alpha": t.alpha}


def emit(obj: Union[PiecewiseLogLinear, PLTriple]) -> str:
    if isinstance(obj, PLTriple):
        return canonical_dumps(triple_to_dict(obj)) + "\n"
    return canonical_dumps(density_to_dict(obj)) + "\n"


def _line_of(text: str, key: str) -> Optional[int]:
    pos = text.find(json.dumps(key))
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def _number(value, field: str, text: str, nullable: bool = False) -> Optional[float]:
    if value is None and nullable:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError("expected a number", _line_of(text, field), field)
    value = float(value)
    if not math.isfinite(value):
        raise ParseError("expected a finite number", _line_of(text, field), field)
    return value


def density_from_dict(data, text: str = "", prefix: str = "") -> PiecewiseLogLinear:
    def name(k):
        return f"{prefix}{k}"

    if not isinstance(data, dict):
        raise ParseError("expected an object", None, prefix.rstrip(".") or None)
    for key in ("knots", "logvals"):
        if key not in data:
            raise ParseError("missing required field", None, name(key))
        if not isinstance(data[key], list):
            raise ParseError("expected a list", _line_of(text, key), name(key))
    unknown = set(data) - set(DENSITY_KEYS)
    if unknown:
        key = sorted(unknown)[0]
        raise ParseError("unknown field", _line_of(text, key), name(key))
    knots = [_number(v, "knots", text) for v in data["knots"]]
    logvals = [_number(v, "logvals", text) for v in data["logvals"]]
    if len(knots) != len(logvals):
        raise ParseError(
            f"{len(knots)} knots but {len(logvals)} log values", _line_of(text, "logvals"), name("logvals")
        )
    if any(not b > a for a, b in zip(knots, knots[1:])):
        raise ParseError("knots must be strictly increasing", _line_of(text, "knots"), name("knots"))
    left = _number(data.get("left_tail_slope"), "left_tail_slope", text, nullable=True)
    right = _number(data.get("right_tail_slope"), "right_tail_slope", text, nullable=True)
    normalized = data.get("normalized", False)
    if not isinstance(normalized, bool):
        raise ParseError("expected true or false", _line_of(text, "normalized"), name("normalized"))
    cls = LogConcaveDensity if normalized else LogConcaveFunction
    try:
        return cls(tuple(knots), tuple(logvals), left, right)
    except (PLStabError, ValueError) as exc:
        raise ParseError(f"invalid density: {exc}", None, prefix.rstrip(".") or None) from exc


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from exc


def parse(text: str) -> Union[PiecewiseLogLinear, PLTriple]:
    """Parse a density or a triple (recognised by its ``"m"`` field)."""
    data = _load_json(text)
    if isinstance(data, dict) and "m" in data:
        return triple_from_dict(data, text)
    return density_from_dict(data, text)


def triple_from_dict(data, text: str = "") -> PLTriple:
    if not isinstance(data, dict):
        raise ParseError("expected an object")
    for key in ("m", "f", "g"):
        if key not in data:
            raise ParseError("missing required field", None, key)
    unknown = set(data) - {"m", "f", "g", "alpha"}
    if unknown:
        key = sorted(unknown)[0]
        raise ParseError("unknown field", _line_of(text, key), key)
    alpha = _number(data.get("alpha", 0.5), "alpha", text)
    if not 0.0 < alpha < 1.0:
        raise ParseError("alpha must lie in (0, 1)", _line_of(text, "alpha"), "alpha")
    parts = {k: density_from_dict(data[k], text, f"{k}.") for k in ("m", "f", "g")}
    return PLTriple(parts["m"], parts["f"], parts["g"], alpha)


def load(path: Union[str, Path]):
    return parse(Path(path).read_text())


def save(obj, path: Union[str, Path]) -> None:
    Path(path).write_text(emit(obj))


def io_roundtrip(path: Union[str, Path]):
    """Load a file and pass it once more through emit and parse."""
    return parse(emit(load(path)))
