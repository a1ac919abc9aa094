"""JSON encoding of inputs and reports.

Complex numbers are ``[re, im]``, the point at infinity is ``"inf"`` and
rationals are ``"p/q"`` strings.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Any

import numpy as np

from .errors import InputError
from .forms import LogForm1
from .geom import INF, Arc, Chain, Segment, circle, is_inf

SCHEMA_VERSION = "1"


# ---------------------------------------------------------------- encoding


def encode(x: Any) -> Any:
    """Convert to plain JSON types."""
    if x is None or isinstance(x, (bool, str)):
        return x
    if is_inf(x):
        return "inf"
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (complex, np.complexfloating)):
        return [encode(float(x.real)), encode(float(x.imag))]
    if isinstance(x, np.ndarray):
        return [encode(v) for v in x.tolist()] if x.ndim else encode(x.item())
    if isinstance(x, dict):
        return {str(k): encode(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [encode(v) for v in x]
    raise TypeError(f"cannot encode {type(x).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(encode(obj), sort_keys=True, indent=2, allow_nan=False)


# ---------------------------------------------------------------- decoding


def parse_complex(x: Any) -> complex:
    """Accept numbers, ``[re, im]`` and strings such as ``"1+i"`` or ``"-0.5+2.1i"``."""
    if isinstance(x, bool):
        raise InputError("expected a number")
    if isinstance(x, (int, float, complex)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        s = x.strip().replace(" ", "").replace("i", "j")
        try:
            return complex(s)
        except ValueError:
            pass
    raise InputError(f"cannot parse complex number {x!r}")


def parse_point(x: Any):
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity", "oo"):
        return INF
    return parse_complex(x)


def parse_rational(x: Any) -> Fraction:
    if isinstance(x, bool):
        raise InputError("expected a rational number")
    try:
        if isinstance(x, float):
            return Fraction(x).limit_denominator(10 ** 12)
        return Fraction(x)
    except (ValueError, TypeError, ZeroDivisionError):
        raise InputError(f"cannot parse rational {x!r}") from None


def _require(d: Any, key: str):
    if not isinstance(d, dict) or key not in d:
        raise InputError(f"missing field {key!r}")
    return d[key]


def parse_piece(d: Any) -> list:
    if not isinstance(d, dict) or len(d) != 1:
        raise InputError(f"a path piece must be an object with one key, got {d!r}")
    kind, v = next(iter(d.items()))
    try:
        if kind == "segment":
            direction = v.get("direction")
            return [Segment(parse_complex(_require(v, "start")), parse_point(_require(v, "end")),
                            None if direction is None else parse_complex(direction))]
        if kind == "arc":
            t0, t1 = _require(v, "theta")
            return [Arc(parse_complex(_require(v, "center")), float(_require(v, "radius")), float(t0), float(t1))]
        if kind == "circle":
            return list(circle(parse_complex(_require(v, "center")), float(_require(v, "radius")),
                               bool(v.get("ccw", True)), float(v.get("start_angle", 0.0))))
    except (TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"malformed {kind}: {exc}") from None
    raise InputError(f"unknown path piece {kind!r}")


def parse_chain(d: Any) -> Chain:
    """A chain is a list of ``{"coeff": c, "path": [piece, ...]}``."""
    if not isinstance(d, list):
        raise InputError("a chain must be a list of terms")
    terms = []
    for t in d:
        path = _require(t, "path")
        if not isinstance(path, list):
            raise InputError("a path must be a list of pieces")
        pieces = [pc for p in path for pc in parse_piece(p)]
        terms.append((parse_rational(t.get("coeff", 1)), tuple(pieces)))
    return Chain(tuple(terms))


def parse_form(d: Any) -> LogForm1:
    """``{"terms": [[residue, pole], ...], "polynomial": [c0, c1, ...]}``."""
    if not isinstance(d, dict):
        raise InputError("a form must be an object")
    terms = d.get("terms", [])
    if not isinstance(terms, list) or any(not isinstance(t, list) or len(t) != 2 for t in terms):
        raise InputError("form terms must be [residue, pole] pairs")
    return LogForm1(tuple((parse_complex(c), parse_complex(p)) for c, p in terms),
                    tuple(parse_complex(c) for c in d.get("polynomial", [])))


def encode_piece(pc) -> dict:
    if isinstance(pc, Segment):
        out = {"start": pc.start, "end": pc.end}
        if pc.is_ray:
            out["direction"] = pc.direction
        return encode({"segment": out})
    return encode({"arc": {"center": pc.center, "radius": pc.radius, "theta": [pc.theta_start, pc.theta_end]}})


def encode_chain(c: Chain) -> list:
    return [{"coeff": encode(k), "path": [encode_piece(pc) for pc in path]} for k, path in c.terms]


def encode_form(f: LogForm1) -> dict:
    out = {"terms": [[encode(c), encode(p)] for c, p in f.terms]}
    if f.polynomial:
        out["polynomial"] = [encode(c) for c in f.polynomial]
    return out


# ---------------------------------------------------------------- reports


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.residual) and self.residual <= self.tolerance)

    def to_json(self) -> dict:
        return {"name": self.name, "residual": encode(float(self.residual)),
                "tolerance": encode(float(self.tolerance)), "pass": self.passed}


@dataclass
class Report:
    command: str
    inputs: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    abs_error: float = 0.0
    checks: list = field(default_factory=list)
    seed: int = 0
    evals: int = 0
    wall_time_ms: int = 0
    error: dict | None = None

    @property
    def failures(self) -> int:
        return sum(not c.passed for c in self.checks)

    def add(self, name: str, residual: float, tolerance: float) -> Check:
        c = Check(name, float(residual), float(tolerance))
        self.checks.append(c)
        return c

    def to_json(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "inputs": encode(self.inputs),
            "values": encode(self.values),
            "abs_error": encode(float(self.abs_error)),
            "checks": [c.to_json() for c in self.checks],
            "seed": int(self.seed),
            "evals": int(self.evals),
            "wall_time_ms": int(self.wall_time_ms),
        }
        if self.error is not None:
            out["error"] = encode(self.error)
        return out

    def dumps(self, timing: bool = True) -> str:
        d = self.to_json()
        if not timing:
            d.pop("wall_time_ms")
        return json.dumps(d, sort_keys=True, indent=2, allow_nan=False)

    @classmethod
    def from_json(cls, d: dict) -> "Report":
        checks = [Check(c["name"], math.inf if c["residual"] is None else c["residual"], c["tolerance"])
                  for c in d.get("checks", [])]
        return cls(d["command"], d.get("inputs", {}), d.get("values", {}), d.get("abs_error") or 0.0, checks,
                   d.get("seed", 0), d.get("evals", 0), d.get("wall_time_ms", 0), d.get("error"))


def data_file(name: str):
    """Path-like handle to a file shipped in the package ``data`` directory."""
    return resources.files("svperiod").joinpath("data", name)


def load_schema(name: str) -> dict:
    return json.loads(data_file(name).read_text())
