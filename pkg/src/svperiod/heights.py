"""Archimedean height pairing of degree-zero divisors on P^1."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import DuplicatePoint, InputError, NonZeroDegree, OverlappingSupports
from .forms import LogForm1
from .geom import INF, ProjPoint, as_point, is_inf, point_str
from .quad import Estimate, QuadConfig, integrate_sphere

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class DivisorDeg0:
    """``sum m_i (d_i)`` with rational m_i summing to zero; points may include inf."""

    terms: tuple = ()

    def __post_init__(self):
        terms, seen = [], []
        for m, p in self.terms:
            p = as_point(p)
            if p in seen:
                raise DuplicatePoint(f"{point_str(p)} appears twice")
            seen.append(p)
            if Fraction(m) != 0:
                terms.append((Fraction(m), p))
        terms = tuple(terms)
        if sum((m for m, _ in terms), Fraction(0)) != 0:
            raise NonZeroDegree("divisor must have degree zero")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, pairs: Iterable) -> "DivisorDeg0":
        return cls(tuple(pairs))

    def support(self) -> list[ProjPoint]:
        return [p for _, p in self.terms]

    def coefficient(self, p) -> Fraction:
        p = as_point(p)
        for m, q in self.terms:
            if (is_inf(p) and is_inf(q)) or (not is_inf(p) and not is_inf(q) and p == q):
                return m
        return Fraction(0)

    def __rmul__(self, k) -> "DivisorDeg0":
        return DivisorDeg0(tuple((Fraction(k) * m, p) for m, p in self.terms))

    def __add__(self, other: "DivisorDeg0") -> "DivisorDeg0":
        merged = {p: m for m, p in self.terms}
        for m, p in other.terms:
            merged[p] = merged.get(p, Fraction(0)) + m
        return DivisorDeg0(tuple((m, p) for p, m in merged.items()))

    def describe(self) -> str:
        return " + ".join(f"{m}({point_str(p)})" for m, p in self.terms) or "0"


def nu_divisor(D: DivisorDeg0) -> LogForm1:
    """The logarithmic form with residue m_i at d_i (the inf term is implicit)."""
    return LogForm1(tuple((float(m), p) for m, p in D.terms if not is_inf(p)))


def _check_disjoint(D: DivisorDeg0, E: DivisorDeg0):
    for p in D.support():
        if E.coefficient(p) != 0:
            raise OverlappingSupports(f"both divisors contain {point_str(p)}")


def height_pairing(D: DivisorDeg0, E: DivisorDeg0, cfg: QuadConfig = QuadConfig()) -> Estimate:
    """``-(2 pi i)^-1 * integral of conj(nu_D) ^ nu_E``, equal to ``(2 pi i)^-1 * integral nu_E ^ conj(nu_D)``.

    The value is the real part; the imaginary part is kept in the diagnostics.
    """
    _check_disjoint(D, E)
    raw = integrate_sphere(nu_divisor(E), nu_divisor(D), cfg).scaled(1 / TWO_PI_I)
    diag = dict(raw.diagnostics)
    diag["imag"] = raw.value.imag
    return Estimate(complex(raw.value.real), raw.abs_error, raw.evals, raw.method, diag)


def green_closed_form(D: DivisorDeg0, E: DivisorDeg0) -> float:
    """``sum_ij m_i n_j log|d_i - e_j|^2`` over finite points."""
    _check_disjoint(D, E)
    total = []
    for m, d in D.terms:
        for n, e in E.terms:
            if is_inf(d) or is_inf(e):
                continue
            total.append(float(m * n) * math.log(abs(d - e) ** 2))
    return math.fsum(total)


@dataclass(frozen=True)
class RationalFunction:
    """``scale * prod (z - zero)^k / prod (z - pole)^k``; finite zeros and poles only."""

    zeros: tuple = ()  # (point, multiplicity)
    poles: tuple = ()
    scale: complex = 1.0

    def __post_init__(self):
        if complex(self.scale) == 0:
            raise InputError("scale must be nonzero")
        for p, k in self.zeros + self.poles:
            if is_inf(as_point(p)) or int(k) != k or k <= 0:
                raise InputError("zeros and poles must be finite with positive integer multiplicity")

    @property
    def degree_at_infinity(self) -> int:
        """Order of the pole at inf (negative for a zero there)."""
        return sum(k for _, k in self.zeros) - sum(k for _, k in self.poles)

    def divisor(self) -> DivisorDeg0:
        terms = [(k, as_point(p)) for p, k in self.zeros] + [(-k, as_point(p)) for p, k in self.poles]
        if self.degree_at_infinity:
            terms.append((-self.degree_at_infinity, INF))
        return DivisorDeg0(tuple(terms))

    def log_abs2(self, x) -> float:
        """``log|f(x)|^2``; at inf this is the log of the leading coefficient when f(inf) is finite."""
        x = as_point(x)
        if is_inf(x):
            if self.degree_at_infinity != 0:
                raise OverlappingSupports("f has a zero or pole at infinity")
            return math.log(abs(complex(self.scale)) ** 2)
        val = math.log(abs(complex(self.scale)) ** 2)
        for p, k in self.zeros:
            val += k * math.log(abs(x - as_point(p)) ** 2)
        for p, k in self.poles:
            val -= k * math.log(abs(x - as_point(p)) ** 2)
        return val


@dataclass(frozen=True)
class PrincipalCheck:
    residual: float
    predicted: float
    pairing: Estimate


def principal_check(D: DivisorDeg0, f: RationalFunction, cfg: QuadConfig = QuadConfig()) -> PrincipalCheck:
    """Compare ``<D, div f>`` with ``sum_j n_j log|f(x_j)|^2`` where D = sum n_j (x_j)."""
    E = f.divisor()
    _check_disjoint(D, E)
    predicted = math.fsum(float(n) * f.log_abs2(x) for n, x in D.terms)
    if not E.terms:
        est = Estimate(0j, 0.0, 0, "closed_form")
    else:
        est = height_pairing(D, E, cfg)
    return PrincipalCheck(abs(est.value.real - predicted), predicted, est)
