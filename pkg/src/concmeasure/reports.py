"""Result records shared by the estimators and the scenario runner."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import json
import math

import numpy as np


@dataclass
class BoundEstimate:
    """Certified interval [lower, upper] for a constant.

    ``witness`` reproduces ``lower`` when re-evaluated; ``method`` names the
    route that produced the lower bound and ``upper_method`` the upper one.
    """

    lower: float
    upper: float
    witness: Any
    method: str
    upper_method: str = ""
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise AssertionError(f"unsound estimate: lower {self.lower!r} > upper {self.upper!r}")


@dataclass
class CheckReport:
    """Outcome of one inequality check ``lhs <= rhs * (1 + tolerance)``.

    ``status`` is one of ``"pass"``, ``"fail"``, ``"vacuous"`` (the check
    could not be made meaningful, e.g. a zero spectral gap) or
    ``"hypothesis-unmet"``.  Only ``"pass"`` has ``passed`` set.
    """

    name: str
    lhs: float
    rhs: float
    constant: float
    tolerance: float
    passed: bool
    status: str = "pass"
    witness: str = ""
    details: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, name, lhs, rhs, constant, tolerance=0.0, witness="", **details):
        ok = bool(lhs <= rhs * (1.0 + tolerance))
        return cls(name, float(lhs), float(rhs), float(constant), float(tolerance), ok,
                   "pass" if ok else "fail", witness, details)

    @classmethod
    def skipped(cls, name, status, constant, witness="", **details):
        nan = float("nan")
        return cls(name, nan, nan, float(constant), 0.0, False, status, witness, details)

    @property
    def counts(self) -> bool:
        """Whether the check enters the overall verdict."""
        return self.status in ("pass", "fail")


def jsonable(obj):
    """Convert numpy containers and scalars into plain Python objects."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def format_float(x: float) -> str:
    """17 significant digits; NaN and infinities as Python's json module writes them."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    return json.dumps(str(obj) if not isinstance(obj, str) else obj)


def dumps_json(obj) -> str:
    """Indented JSON with floats written to 17 significant digits."""
    return _encode(jsonable(obj), 2, 0) + "\n"
