"""Logarithmic differential forms on P^1 and on C^n.

Two residue notions are kept apart on purpose:

* ``residue_coeff`` is the classical residue of a one-form (no 2*pi*i);
* ``leray_residue`` is the Poincare-Leray residue, which carries 2*pi*i.

Powers of 2*pi*i are tracked as an integer ``twist`` on ``LogFormN`` so that
residue computations on forms with rational coefficients stay exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DivergentIndex,
    EqualEndpoints,
    FactorAbsent,
    InputError,
    NotLogarithmic,
    OnSingularLocus,
)
from .geom import INF, ProjPoint, as_point, is_inf, point_str

TWO_PI_I = 2j * math.pi


def _exact(x):
    """Keep integers and fractions exact, everything else becomes complex."""
    if isinstance(x, Rational):
        return Fraction(x)
    z = complex(x)
    if z.imag == 0 and float(z.real).is_integer():
        return Fraction(int(z.real))
    return z


# ---------------------------------------------------------------- P^1


@dataclass(frozen=True)
class LogForm1:
    """``sum_i c_i dz/(z - a_i) + (p_0 + p_1 z + ...) dz`` on P^1.

    ``terms`` holds ``(residue, pole)`` pairs with finite poles. The residue at
    infinity is implicit (minus the sum of the finite residues). A nonzero
    ``polynomial`` part gives a higher-order pole at infinity; such forms can
    be integrated along paths but are rejected by the sphere integrals.
    """

    terms: tuple = ()
    polynomial: tuple = ()

    def __post_init__(self):
        merged: dict = {}
        for c, a in self.terms:
            a = as_point(a)
            if is_inf(a):
                raise InputError("poles at infinity are implicit in LogForm1")
            merged[a] = merged.get(a, 0) + complex(c)
        terms = tuple((c, a) for a, c in merged.items() if c != 0)
        poly = tuple(complex(p) for p in self.polynomial)
        while poly and poly[-1] == 0:
            poly = poly[:-1]
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "polynomial", poly)

    @classmethod
    def dlog(cls, zeros: Iterable = (), poles: Iterable = ()) -> "LogForm1":
        """``dlog(prod (z - zero) / prod (z - pole))``; infinite points are skipped."""
        terms = [(1, p) for p in zeros if not is_inf(as_point(p))]
        terms += [(-1, p) for p in poles if not is_inf(as_point(p))]
        return cls(tuple(terms))

    @property
    def is_logarithmic(self) -> bool:
        return not self.polynomial

    @property
    def residue_at_infinity(self) -> complex:
        return -sum((c for c, _ in self.terms), 0j)

    def finite_poles(self) -> list[complex]:
        return [a for _, a in self.terms]

    def poles(self, tol: float = 0.0) -> list[ProjPoint]:
        """All poles including infinity when present (``tol`` thresholds the residue at infinity)."""
        out: list[ProjPoint] = list(self.finite_poles())
        if self.polynomial or abs(self.residue_at_infinity) > tol:
            out.append(INF)
        return out

    def __call__(self, z):
        """Coefficient of dz at ``z`` (vectorised)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c, a in self.terms:
            out = out + c / (z - a)
        if self.polynomial:
            out = out + np.polynomial.polynomial.polyval(z, self.polynomial)
        return out

    def in_w_chart(self, w):
        """Coefficient of dw at ``w = 1/z`` (vectorised); logarithmic forms only."""
        if self.polynomial:
            raise NotLogarithmic("form has a higher-order pole at infinity")
        w = np.asarray(w, dtype=complex)
        # c dz/(z-a) = -c dw / (w (1 - a w)) = (-c/w - c a/(1 - a w)) dw
        out = self.residue_at_infinity / w
        for c, a in self.terms:
            out = out - c * a / (1.0 - a * w)
        return out

    def __add__(self, other: "LogForm1") -> "LogForm1":
        p, q = list(self.polynomial), list(other.polynomial)
        n = max(len(p), len(q))
        p += [0] * (n - len(p))
        q += [0] * (n - len(q))
        return LogForm1(self.terms + other.terms, tuple(x + y for x, y in zip(p, q)))

    def __rmul__(self, k) -> "LogForm1":
        k = complex(k)
        return LogForm1(tuple((k * c, a) for c, a in self.terms), tuple(k * p for p in self.polynomial))

    def __neg__(self) -> "LogForm1":
        return (-1) * self

    def __sub__(self, other: "LogForm1") -> "LogForm1":
        return self + (-other)

    def to_formn(self) -> "LogFormN":
        if self.polynomial:
            raise NotLogarithmic("polynomial part cannot be written as a LogFormN")
        return LogFormN(1, tuple((_exact(c), (LinFactor.const(1, a),)) for c, a in self.terms))

    def describe(self) -> str:
        parts = [f"({c:g}) dz/(z - {a:g})" for c, a in self.terms]
        if self.polynomial:
            parts.append("(" + " + ".join(f"{p:g} z^{k}" for k, p in enumerate(self.polynomial)) + ") dz")
        return " + ".join(parts) or "0"


def residue_coeff(f: LogForm1, p) -> complex:
    p = as_point(p)
    if is_inf(p):
        return f.residue_at_infinity
    for c, a in f.terms:
        if a == p:
            return c
    return 0j


def c0_dual_path(b1, b2) -> LogForm1:
    """``dlog((z - b2)/(z - b1))``: residue -1 at b1 and +1 at b2.

    This is 2*pi*i times the dual form of the class of a path from b1 to b2.
    A factor ``z - inf`` is replaced by 1.
    """
    b1, b2 = as_point(b1), as_point(b2)
    if (is_inf(b1) and is_inf(b2)) or (not is_inf(b1) and not is_inf(b2) and b1 == b2):
        raise EqualEndpoints("path endpoints coincide")
    return LogForm1.dlog(zeros=[b2], poles=[b1])


# ---------------------------------------------------------------- C^n


@dataclass(frozen=True)
class LinFactor:
    """``t_i - a`` (``j is None``) or ``t_i - t_j`` with ``i < j``; coordinates are 1-based."""

    i: int
    j: int | None = None
    a: complex | Fraction = 0

    def __post_init__(self):
        if self.i < 1 or (self.j is not None and self.j < 1):
            raise InputError("coordinates are 1-based")
        if self.j is not None:
            if self.j == self.i:
                raise InputError("t_i - t_i is not a factor")
            if self.j < self.i:
                raise InputError("coord_minus_coord factors are canonical with i < j; use LinFactor.coords")
            object.__setattr__(self, "a", Fraction(0))
        else:
            object.__setattr__(self, "a", _exact(self.a))

    @classmethod
    def const(cls, i: int, a) -> "LinFactor":
        return cls(i, None, a)

    @classmethod
    def coords(cls, i: int, j: int) -> tuple[int, "LinFactor"]:
        """``t_i - t_j`` as (sign, canonical factor)."""
        if i < j:
            return 1, cls(i, j)
        return -1, cls(j, i)

    def key(self):
        a = complex(self.a)
        return (self.i, self.j or 0, a.real, a.imag)

    def max_coord(self) -> int:
        return max(self.i, self.j or 0)

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        if self.j is None:
            return t[..., self.i - 1] - complex(self.a)
        return t[..., self.i - 1] - t[..., self.j - 1]

    def describe(self) -> str:
        if self.j is None:
            a = complex(self.a)
            return f"(t{self.i} - {a:g})" if a != 0 else f"t{self.i}"
        return f"(t{self.i} - t{self.j})"


@dataclass(frozen=True)
class LogFormN:
    """``(2 pi i)^twist * sum_k s_k dt_1 ^ ... ^ dt_n / prod(factors_k)``."""

    n: int
    terms: tuple = ()
    twist: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise InputError("negative dimension")
        clean = []
        for s, facs in self.terms:
            facs = tuple(sorted(facs, key=LinFactor.key))
            if len(set(facs)) != len(facs):
                raise NotLogarithmic("repeated factor in a denominator")
            for f in facs:
                if f.max_coord() > self.n:
                    raise InputError(f"factor {f.describe()} exceeds dimension {self.n}")
            s = _exact(s)
            if s != 0:
                clean.append((s, facs))
        object.__setattr__(self, "terms", tuple(clean))

    def prefactor(self) -> complex:
        return TWO_PI_I ** self.twist

    def __call__(self, t) -> np.ndarray:
        """Coefficient of dt_1 ^ ... ^ dt_n at points ``t`` of shape (..., n)."""
        t = np.asarray(t, dtype=complex)
        if t.shape[-1] != self.n:
            raise InputError(f"points must have last dimension {self.n}")
        out = np.zeros(t.shape[:-1], dtype=complex)
        for s, facs in self.terms:
            den = np.ones(t.shape[:-1], dtype=complex)
            for f in facs:
                den = den * f.evaluate(t)
            out = out + complex(s) / den
        return out * self.prefactor()

    def wedge(self, other: "LogFormN") -> "LogFormN":
        """Exterior product with ``other``'s coordinates renumbered after ours."""
        shift = self.n
        terms = []
        for s1, f1 in self.terms:
            for s2, f2 in other.terms:
                moved = []
                for f in f2:
                    if f.j is None:
                        moved.append(LinFactor.const(f.i + shift, f.a))
                    else:
                        moved.append(LinFactor(f.i + shift, f.j + shift))
                terms.append((s1 * s2, f1 + tuple(moved)))
        return LogFormN(self.n + other.n, tuple(terms), self.twist + other.twist)

    def __rmul__(self, k) -> "LogFormN":
        k = _exact(k)
        return LogFormN(self.n, tuple((k * s, f) for s, f in self.terms), self.twist)

    def factors(self) -> set:
        return {f for _, facs in self.terms for f in facs}

    def constants_for(self, i: int) -> list[complex]:
        """Constants ``a`` with a factor ``t_i - a``."""
        return sorted({complex(f.a) for f in self.factors() if f.j is None and f.i == i},
                      key=lambda z: (z.real, z.imag))

    def couplings(self) -> set[tuple[int, int]]:
        return {(f.i, f.j) for f in self.factors() if f.j is not None}

    def describe(self) -> str:
        parts = []
        for s, facs in self.terms:
            den = "".join(f.describe() for f in facs) or "1"
            parts.append(f"({s}) dt/{den}")
        pre = f"(2pi i)^{self.twist} * " if self.twist else ""
        return pre + (" + ".join(parts) or "0")


def _restrict(f: LinFactor, i: int, sub: LinFactor):
    """Restrict factor ``f`` to the hyperplane ``sub = 0`` solved for ``t_i``.

    Returns ``(constant multiplier, factor or None)`` in the renumbered
    coordinates (``t_k`` for ``k > i`` becomes ``t_{k-1}``).
    """

    def ren(k: int) -> int:
        return k - 1 if k > i else k

    # value of t_i on the hyperplane: a constant or another coordinate
    if sub.j is None:
        ti_const, ti_coord = sub.a, None
    else:
        ti_const, ti_coord = None, (sub.j if sub.i == i else sub.i)

    if f.j is None:
        if f.i != i:
            return 1, LinFactor.const(ren(f.i), f.a)
        if ti_coord is None:
            return _exact(ti_const - f.a), None
        return 1, LinFactor.const(ren(ti_coord), f.a)
    # f = t_p - t_q
    p, q = f.i, f.j
    if i not in (p, q):
        return 1, LinFactor(ren(p), ren(q))
    other = q if p == i else p
    sign = 1 if p == i else -1  # f = sign * (t_i - t_other)
    if ti_coord is None:
        # t_i - t_other -> c - t_other = -(t_other - c)
        return -sign, LinFactor.const(ren(other), ti_const)
    if ti_coord == other:
        raise NotLogarithmic("factor vanishes identically on the hyperplane")
    s2, g = LinFactor.coords(ren(ti_coord), ren(other))
    return sign * s2, g


def leray_residue(form: LogFormN, factor: LinFactor):
    """Poincare-Leray residue along ``factor = 0``.

    The hyperplane is parametrised by the remaining coordinates in their
    original order; the eliminated coordinate is ``factor.i``. Writing
    dt_1^...^dt_n = (-1)^(i-1) d(factor) ^ (rest), each term containing the
    factor contributes ``2 pi i (-1)^(i-1)`` times its restricted remainder.
    For ``n == 1`` the result is a number: exact when the twist cancels.
    """
    i = factor.i
    found = False
    terms = []
    for s, facs in form.terms:
        if factor not in facs:
            continue
        found = True
        coeff = s * (-1) ** (i - 1)
        rest = []
        for g in facs:
            if g == factor:
                continue
            k, h = _restrict(g, i, factor)
            if h is None:
                coeff = coeff / k
            else:
                coeff = coeff / k
                rest.append(h)
        terms.append((coeff, tuple(rest)))
    if not found:
        raise FactorAbsent(f"{factor.describe()} does not occur in the form")
    res = LogFormN(form.n - 1, tuple(terms), form.twist + 1)
    if form.n == 1:
        total = sum((s for s, _ in res.terms), Fraction(0))
        return total if res.twist == 0 else complex(total) * res.prefactor()
    return res


def c0_dual_hypercube(n: int) -> LogFormN:
    """``(-1)^(n(n+1)/2) (2 pi i)^-n dz_1...dz_n / prod z_i (1 - z_i)``."""
    if n < 1:
        raise InputError("n >= 1 required")
    # 1/(z(1-z)) = -1/(z(z-1))
    sign = (-1) ** (n * (n + 1) // 2 + n)
    facs = tuple(f for k in range(1, n + 1) for f in (LinFactor.const(k, 0), LinFactor.const(k, 1)))
    return LogFormN(n, ((sign, facs),), twist=-n)


def _check_indices(indices: Sequence[int]) -> list[int]:
    idx = [int(k) for k in indices]
    if not idx or any(k < 1 for k in idx):
        raise InputError("indices must be positive integers")
    if idx[-1] < 2:
        raise DivergentIndex("last index must be >= 2")
    return idx


def mzv_letters(indices: Sequence[int]) -> list[int]:
    """(1, 0^(n1-1), 1, 0^(n2-1), ...)"""
    out = []
    for k in _check_indices(indices):
        out += [1] + [0] * (k - 1)
    return out


def mzv_omega(indices: Sequence[int]) -> LogFormN:
    """``(-1)^r prod dt_i/(t_i - e_i)``; its integral over the real simplex is the MZV."""
    idx = _check_indices(indices)
    e = mzv_letters(idx)
    facs = tuple(LinFactor.const(k + 1, ek) for k, ek in enumerate(e))
    return LogFormN(len(e), (((-1) ** len(idx), facs),))


def mzv_nu(n: int) -> LogFormN:
    """``dt_1...dt_n / (t_1 (t_2 - t_1) ... (t_n - t_{n-1}) (1 - t_n))``."""
    if n < 1:
        raise InputError("n >= 1 required")
    sign = 1
    facs = [LinFactor.const(1, 0)]
    for k in range(1, n):
        s, f = LinFactor.coords(k + 1, k)
        sign *= s
        facs.append(f)
    # 1 - t_n = -(t_n - 1)
    sign *= -1
    facs.append(LinFactor.const(n, 1))
    return LogFormN(n, ((sign, tuple(facs)),))


def eval_form(f, t):
    """Coefficient of the top form at ``t``; raises on the singular locus."""
    if isinstance(f, LogForm1):
        z = complex(t)
        if any(z == a for a in f.finite_poles()):
            raise OnSingularLocus(f"{z} is a pole")
        return complex(f(z))
    pt = np.atleast_1d(np.asarray(t, dtype=complex))
    for _, facs in f.terms:
        for g in facs:
            if g.evaluate(pt) == 0:
                raise OnSingularLocus(f"point lies on {g.describe()} = 0")
    return complex(f(pt))


def iterated_residue(form: LogFormN, corner: Sequence) -> Fraction | complex:
    """Leray residues along t_1 = corner[0], then (renumbered) t_1 = corner[1], ..."""
    if len(corner) != form.n:
        raise InputError("corner must have one entry per coordinate")
    out = form
    for c in corner:
        out = leray_residue(out, LinFactor.const(1, c))
    return out
