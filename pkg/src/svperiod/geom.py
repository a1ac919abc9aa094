"""Points of the projective line, piecewise paths, chains and intersection numbers."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    DuplicatePoint,
    InputError,
    NonGenericIntersection,
    OverlappingDivisors,
    SingularMatrix,
)

SEPARATION_TOL = 1e-9
TWO_PI = 2.0 * math.pi


class _Infinity:
    """The point at infinity of P^1. Use the module constant ``INF``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
ProjPoint = Union[complex, _Infinity]


def is_inf(p) -> bool:
    return p is INF


def as_point(p) -> ProjPoint:
    """Coerce numbers and the string ``"inf"`` to a ``ProjPoint``."""
    if p is INF:
        return INF
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return INF
        try:
            return complex(s.replace("i", "j"))
        except ValueError as exc:
            raise InputError(f"cannot parse point {p!r}") from exc
    z = complex(p)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InputError(f"finite point expected, got {p!r}")
    return z


def point_str(p: ProjPoint) -> str:
    if is_inf(p):
        return "inf"
    return repr(complex(p))


@dataclass(frozen=True)
class Configuration:
    A: tuple
    B: tuple


def validate_configuration(A: Iterable, B: Iterable) -> Configuration:
    A = tuple(as_point(p) for p in A)
    B = tuple(as_point(p) for p in B)
    for name, pts in (("A", A), ("B", B)):
        if len(set(pts)) != len(pts):
            raise DuplicatePoint(f"duplicate point in {name}")
    common = set(A) & set(B)
    if common:
        raise OverlappingDivisors(f"A and B share {sorted(map(point_str, common))}")
    return Configuration(A, B)


# ---------------------------------------------------------------- pieces


@dataclass(frozen=True)
class Segment:
    """Straight segment, or a ray to infinity when ``end is INF``.

    A ray needs a unit ``direction``; it defaults to the radial direction of
    ``start``.
    """

    start: complex
    end: ProjPoint
    direction: complex | None = None

    def __post_init__(self):
        start = as_point(self.start)
        if is_inf(start):
            raise InputError("a segment cannot start at infinity")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", as_point(self.end))
        if is_inf(self.end):
            d = self.direction
            if d is None:
                if self.start == 0:
                    raise InputError("ray from 0 needs an explicit direction")
                d = self.start / abs(self.start)
            d = complex(d)
            if d == 0:
                raise InputError("zero ray direction")
            object.__setattr__(self, "direction", d / abs(d))
        else:
            object.__setattr__(self, "end", complex(self.end))
            if abs(self.end - self.start) == 0:
                raise InputError("zero-length segment")
            object.__setattr__(self, "direction", None)

    @property
    def is_ray(self) -> bool:
        return is_inf(self.end)

    def reversed(self):
        if self.is_ray:
            raise InputError("a ray to infinity cannot be reversed")
        return Segment(self.end, self.start)

    def conjugate(self):
        if self.is_ray:
            return Segment(self.start.conjugate(), INF, self.direction.conjugate())
        return Segment(self.start.conjugate(), self.end.conjugate())

    def point(self, t):
        if self.is_ray:
            return self.start + self.direction * t
        return self.start + (self.end - self.start) * t


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius*exp(i*theta)``, theta from theta_start to theta_end."""

    center: complex
    radius: float
    theta_start: float
    theta_end: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise InputError("arc radius must be positive")
        if self.theta_start == self.theta_end:
            raise InputError("zero-length arc")

    @property
    def start(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta_start)

    @property
    def end(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta_end)

    @property
    def orientation(self) -> int:
        return 1 if self.theta_end > self.theta_start else -1

    def reversed(self):
        return Arc(self.center, self.radius, self.theta_end, self.theta_start)

    def conjugate(self):
        return Arc(self.center.conjugate(), self.radius, -self.theta_start, -self.theta_end)

    def point(self, t):
        th = self.theta_start + (self.theta_end - self.theta_start) * t
        return self.center + self.radius * np.exp(1j * th)


Piece = Union[Segment, Arc]


def circle(center: complex, radius: float, ccw: bool = True, start_angle: float = 0.0) -> tuple:
    """A closed loop as a one-piece path starting at angle ``start_angle``."""
    return (Arc(center, radius, start_angle, start_angle + (TWO_PI if ccw else -TWO_PI)),)


def _same_point(p, q) -> bool:
    if is_inf(p) or is_inf(q):
        return p is q
    return abs(p - q) <= SEPARATION_TOL * max(1.0, abs(p))


def validate_path(pieces: Sequence[Piece]) -> tuple:
    pieces = tuple(pieces)
    if not pieces:
        raise InputError("empty path")
    for k, (a, b) in enumerate(zip(pieces, pieces[1:])):
        if isinstance(a, Segment) and a.is_ray:
            raise InputError("a ray to infinity must be the last piece of a path")
        if not _same_point(a.end, b.start):
            raise InputError(f"path pieces {k} and {k + 1} do not connect")
    return pieces


def path_start(path) -> ProjPoint:
    return path[0].start


def path_end(path) -> ProjPoint:
    return path[-1].end


def is_loop(path) -> bool:
    return _same_point(path_start(path), path_end(path))


@dataclass(frozen=True)
class Chain:
    """Formal rational combination of paths: ``terms = ((coeff, path), ...)``."""

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple((Fraction(c), validate_path(p)) for c, p in self.terms)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, *pieces: Piece, coeff=1) -> "Chain":
        return cls(((coeff, tuple(pieces)),))

    def __add__(self, other: "Chain") -> "Chain":
        return Chain(self.terms + other.terms)

    def __sub__(self, other: "Chain") -> "Chain":
        return self + (-1) * other

    def __rmul__(self, c) -> "Chain":
        c = Fraction(c)
        return Chain(tuple((c * k, p) for k, p in self.terms))

    def __neg__(self) -> "Chain":
        return (-1) * self

    def reversed(self) -> "Chain":
        return Chain(tuple((c, tuple(pc.reversed() for pc in reversed(p))) for c, p in self.terms))

    def conjugate(self) -> "Chain":
        """Pointwise complex conjugate of every path."""
        return Chain(tuple((c, tuple(pc.conjugate() for pc in p)) for c, p in self.terms))

    def pieces(self):
        for c, path in self.terms:
            for pc in path:
                yield c, pc


def boundary(c: Chain) -> dict:
    """Formal combination ``{point: coeff}`` of path ends minus path starts; zeros dropped."""
    out: dict = {}
    for coeff, path in c.terms:
        if is_loop(path):
            continue
        for p, sgn in ((path_end(path), 1), (path_start(path), -1)):
            key = _bucket(out, p)
            out[key] = out.get(key, Fraction(0)) + sgn * coeff
    return {p: v for p, v in out.items() if v != 0}


def _bucket(existing: dict, p):
    for q in existing:
        if _same_point(p, q):
            return q
    return p


# ---------------------------------------------------------------- crossings


def _cross(u: complex, v: complex) -> float:
    """z-component of the planar cross product; > 0 iff (u, v) is positively oriented."""
    return u.real * v.imag - u.imag * v.real


def _line_params(seg: Segment):
    if seg.is_ray:
        return seg.start, seg.direction, math.inf
    return seg.start, seg.end - seg.start, 1.0


def _in_range(t: float, tmax: float, tol: float) -> tuple[bool, bool]:
    """(inside-or-touching, touching-an-end) for parameter ``t`` in [0, tmax]."""
    inside = -tol <= t <= tmax + tol
    at_end = abs(t) <= tol or (math.isfinite(tmax) and abs(t - tmax) <= tol)
    return inside, at_end


def _arc_param(arc: Arc, phi: float, tol: float) -> tuple[bool, bool, float]:
    """Locate angle ``phi`` on the arc: (on arc, at an end, signed offset from theta_start)."""
    lo, hi = sorted((arc.theta_start, arc.theta_end))
    span = hi - lo
    off = (phi - lo) % TWO_PI
    # angular tolerance from the metric one
    atol = tol / arc.radius
    if span >= TWO_PI - atol:
        at_end = min(off, TWO_PI - off) <= atol
        return True, at_end, off
    if off > span + atol and off < TWO_PI - atol:
        return False, False, off
    at_end = off <= atol or abs(off - span) <= atol or off >= TWO_PI - atol
    return True, at_end, off


def _arc_tangent(arc: Arc, phi: float) -> complex:
    return arc.orientation * 1j * cmath.exp(1j * phi)


def _seg_seg(a: Segment, b: Segment) -> int:
    p, d, tmax = _line_params(a)
    q, e, smax = _line_params(b)
    den = _cross(d, e)
    if abs(den) <= SEPARATION_TOL * abs(d) * abs(e):
        # parallel; collinear overlap or contact is non-generic
        if abs(_cross(q - p, d)) / abs(d) <= SEPARATION_TOL:
            t0 = ((q - p) * d.conjugate()).real / abs(d) ** 2
            t1 = t0 + smax * (e * d.conjugate()).real / abs(d) ** 2 if math.isfinite(smax) else (
                math.inf if (e * d.conjugate()).real > 0 else -math.inf)
            lo, hi = sorted((t0, t1))
            tol = SEPARATION_TOL / abs(d)
            if hi >= -tol and lo <= tmax + tol:
                raise NonGenericIntersection("collinear overlapping pieces")
        return 0
    w = q - p
    t = _cross(w, e) / den
    s = _cross(w, d) / den
    ins_t, end_t = _in_range(t, tmax, SEPARATION_TOL / abs(d))
    ins_s, end_s = _in_range(s, smax, SEPARATION_TOL / abs(e))
    if not (ins_t and ins_s):
        return 0
    if end_t or end_s:
        raise NonGenericIntersection("crossing at a piece endpoint")
    return 1 if den > 0 else -1


def _seg_arc(a: Segment, b: Arc, seg_first: bool) -> int:
    p, d, tmax = _line_params(a)
    c, r = b.center, b.radius
    # |p + t d - c|^2 = r^2
    w = p - c
    A = abs(d) ** 2
    B = 2.0 * (d.conjugate() * w).real
    C = abs(w) ** 2 - r * r
    # distance from centre to the line, for tangency
    t_close = -B / (2 * A)
    dist = abs(w + t_close * d)
    tol_t = SEPARATION_TOL / abs(d)
    if abs(dist - r) <= SEPARATION_TOL:
        ins, _ = _in_range(t_close, tmax, tol_t)
        if ins:
            on, _, _ = _arc_param(b, cmath.phase(p + t_close * d - c), SEPARATION_TOL)
            if on:
                raise NonGenericIntersection("segment tangent to arc")
        return 0
    if dist > r:
        return 0
    disc = math.sqrt(max(B * B - 4 * A * C, 0.0))
    total = 0
    for t in ((-B - disc) / (2 * A), (-B + disc) / (2 * A)):
        ins, end_t = _in_range(t, tmax, tol_t)
        if not ins:
            continue
        z = p + t * d
        phi = cmath.phase(z - c)
        on, end_a, _ = _arc_param(b, phi, SEPARATION_TOL)
        if not on:
            continue
        if end_t or end_a:
            raise NonGenericIntersection("crossing at a piece endpoint")
        ta = _arc_tangent(b, phi)
        cr = _cross(d, ta) if seg_first else _cross(ta, d)
        total += 1 if cr > 0 else -1
    return total


def _arc_arc(a: Arc, b: Arc) -> int:
    c1, r1, c2, r2 = a.center, a.radius, b.center, b.radius
    dvec = c2 - c1
    dist = abs(dvec)
    tol = SEPARATION_TOL
    if dist <= tol and abs(r1 - r2) <= tol:
        # same circle: any angular overlap is non-generic
        for probe in (b.theta_start, b.theta_end, 0.5 * (b.theta_start + b.theta_end)):
            if _arc_param(a, probe, tol)[0]:
                raise NonGenericIntersection("overlapping arcs")
        for probe in (a.theta_start, a.theta_end):
            if _arc_param(b, probe, tol)[0]:
                raise NonGenericIntersection("overlapping arcs")
        return 0
    if dist <= tol:
        return 0
    u = dvec / dist
    tangent = abs(dist - (r1 + r2)) <= tol or abs(dist - abs(r1 - r2)) <= tol
    if tangent:
        x = (r1 * r1 - r2 * r2 + dist * dist) / (2 * dist)
        z = c1 + x * u
        if _arc_param(a, cmath.phase(z - c1), tol)[0] and _arc_param(b, cmath.phase(z - c2), tol)[0]:
            raise NonGenericIntersection("tangent arcs")
        return 0
    if dist > r1 + r2 or dist < abs(r1 - r2):
        return 0
    x = (r1 * r1 - r2 * r2 + dist * dist) / (2 * dist)
    h = math.sqrt(max(r1 * r1 - x * x, 0.0))
    total = 0
    for z in (c1 + x * u + 1j * h * u, c1 + x * u - 1j * h * u):
        pa, pb = cmath.phase(z - c1), cmath.phase(z - c2)
        on_a, end_a, _ = _arc_param(a, pa, tol)
        on_b, end_b, _ = _arc_param(b, pb, tol)
        if not (on_a and on_b):
            continue
        if end_a or end_b:
            raise NonGenericIntersection("crossing at a piece endpoint")
        total += 1 if _cross(_arc_tangent(a, pa), _arc_tangent(b, pb)) > 0 else -1
    return total


def piece_intersection(a: Piece, b: Piece) -> int:
    """Signed transverse crossings of two pieces, +1 for a positive (tangent a, tangent b) frame."""
    if isinstance(a, Segment) and isinstance(b, Segment):
        return _seg_seg(a, b)
    if isinstance(a, Segment):
        return _seg_arc(a, b, True)
    if isinstance(b, Segment):
        return _seg_arc(b, a, False)
    return _arc_arc(a, b)


def intersection_number(c1: Chain, c2: Chain) -> Fraction:
    total = Fraction(0)
    for k1, p1 in c1.pieces():
        for k2, p2 in c2.pieces():
            n = piece_intersection(p1, p2)
            if n:
                total += k1 * k2 * n
    return total


def intersection_matrix(rows: Sequence[Chain], cols: Sequence[Chain]) -> list[list[Fraction]]:
    return [[intersection_number(r, c) for c in cols] for r in rows]


# ---------------------------------------------------------------- exact duality


def _fraction_matrix(M) -> list[list[Fraction]]:
    rows = [[Fraction(x) for x in row] for row in M]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise InputError("square matrix expected")
    return rows


def rational_inverse(M) -> list[list[Fraction]]:
    """Gauss-Jordan inverse over the rationals."""
    a = _fraction_matrix(M)
    n = len(a)
    aug = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrix("matrix is singular over the rationals")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def dual_pairing_matrix(M) -> list[list[Fraction]]:
    """Inverse transpose ``(M^T)^{-1}`` of an intersection matrix, exactly."""
    a = _fraction_matrix(M)
    return rational_inverse([list(col) for col in zip(*a)])


def hypercube_corner_boundary(n: int) -> dict:
    """Iterated partial boundaries of [0, 1]^n as ``{corner: coeff}``.

    Taking the boundary in t_1, then t_2, ..., the corner coefficient is the
    product of the one-dimensional boundary coefficients of [0, 1].
    """
    if n < 1:
        raise InputError("n >= 1 required")
    edge = {round(p.real): c for p, c in boundary(Chain.of(Segment(0, 1))).items()}
    out = {(): Fraction(1)}
    for _ in range(n):
        out = {k + (e,): c * ce for k, c in out.items() for e, ce in sorted(edge.items())}
    return out
