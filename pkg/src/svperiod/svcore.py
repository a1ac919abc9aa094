"""Period matrices, single-valued matrices and pairings, the double copy identity,
single-valued logarithms and single-valued multiple zeta values."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DegenerateModulus, InputError, SingularPeriodMatrix
from .forms import LogForm1, _check_indices, c0_dual_path, mzv_nu, mzv_omega
from .geom import (
    INF,
    Arc,
    Chain,
    Configuration,
    Segment,
    as_point,
    circle,
    dual_pairing_matrix,
    intersection_matrix,
    is_inf,
)
from .quad import Estimate, McConfig, QuadConfig, integrate_mc, integrate_path, integrate_sphere

TWO_PI_I = 2j * math.pi


# ---------------------------------------------------------------- matrices


@dataclass(frozen=True)
class PeriodMatrix:
    """Entry (i, j) pairs Betti chain i with de Rham form j.

    ``twist`` records an overall factor (2 pi i)^(-twist) kept out of the entries.
    """

    entries: np.ndarray
    row_labels: tuple = ()
    col_labels: tuple = ()
    twist: int = 0
    errors: np.ndarray | None = None

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        if np.asarray(self.entries).size == 0:
            e = np.zeros((len(self.row_labels), len(self.col_labels)), dtype=complex)
        object.__setattr__(self, "entries", e)
        if self.row_labels and len(self.row_labels) != e.shape[0]:
            raise InputError("row labels do not match the matrix")
        if self.col_labels and len(self.col_labels) != e.shape[1]:
            raise InputError("column labels do not match the matrix")

    def evaluated(self) -> np.ndarray:
        return self.entries * TWO_PI_I ** (-self.twist)

    def conjugate(self) -> "PeriodMatrix":
        return PeriodMatrix(np.conj(self.entries), self.row_labels, self.col_labels, self.twist,
                            self.errors)


@dataclass(frozen=True)
class SvMatrix:
    entries: np.ndarray
    checks: dict = field(default_factory=dict)
    condition_number: float = 1.0


@dataclass(frozen=True)
class DoubleCopyReport:
    lhs: Estimate
    rhs: complex
    rhs_terms: tuple  # (coefficient, period of nu, conjugate-path period of omega)
    rhs_error: float
    residual: float
    intersection: tuple

    @property
    def combined_error(self) -> float:
        return self.lhs.abs_error + self.rhs_error


def period_matrix(config: Configuration | None, forms: Sequence[LogForm1], chains: Sequence[Chain],
                  cfg: QuadConfig = QuadConfig()) -> PeriodMatrix:
    """Entry (i, j) is the integral of ``forms[j]`` over ``chains[i]``."""
    P = np.zeros((len(chains), len(forms)), dtype=complex)
    E = np.zeros(P.shape)
    for i, c in enumerate(chains):
        for j, f in enumerate(forms):
            est = integrate_path(f, c, cfg)
            P[i, j], E[i, j] = est.value, est.abs_error
    return PeriodMatrix(P, tuple(f"chain{i}" for i in range(len(chains))),
                        tuple(f.describe() for f in forms), 0, E)


def _nearest_int_gap(x: complex) -> float:
    return abs(x - round(x.real))


def sv_matrix(P: PeriodMatrix, Pbar: PeriodMatrix | None = None) -> SvMatrix:
    """``Pbar^-1 P``; ``Pbar`` defaults to the entrywise conjugate (real embedding).

    When ``Pbar`` is omitted (or is the conjugate of ``P``) the involution and
    trace checks are also recorded.
    """
    A = P.evaluated()
    own = Pbar is None
    B = np.conj(A) if own else Pbar.evaluated()
    if not own and np.allclose(B, np.conj(A), rtol=0, atol=1e-14 * max(1.0, np.abs(A).max(initial=0))):
        own = True
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise InputError("period matrices must be square and of equal size")
    k = A.shape[0]
    if k == 0:
        return SvMatrix(np.zeros((0, 0), dtype=complex), {}, 1.0)
    cond = float(np.linalg.cond(B))
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularPeriodMatrix(f"condition number {cond:.3g}")
    S = np.linalg.solve(B, A)
    eye = np.eye(k)
    checks = {"S_Sbar_minus_I": float(np.linalg.norm(S @ np.conj(S) - eye, 2))}
    if own:
        checks["S2_minus_I"] = float(np.linalg.norm(S @ S - eye, 2))
        checks["trace_integrality"] = _nearest_int_gap(np.trace(S))
    return SvMatrix(S, checks, cond)


def sv_matrix_mixed_tate(P: PeriodMatrix, weights: Sequence[int], Pbar: PeriodMatrix | None = None) -> SvMatrix:
    """Variant normalised so that the Lefschetz period maps to +1.

    ``weights`` are the (even) weights of the de Rham basis; the parity
    operator ``diag((-1)^(w/2))`` is applied on the left of ``Pbar^-1 P``.
    """
    base = sv_matrix(P, Pbar)
    if len(weights) != base.entries.shape[0]:
        raise InputError("one weight per basis element")
    if any(w % 2 for w in weights):
        raise InputError("weights must be even")
    parity = np.diag([(-1) ** (w // 2) for w in weights]).astype(complex)
    S = parity @ base.entries
    eye = np.eye(len(weights))
    checks = {"S_Sbar_minus_I": float(np.linalg.norm(S @ np.conj(S) - eye, 2))}
    return SvMatrix(S, checks, base.condition_number)


# ---------------------------------------------------------------- pairings


def sv_pairing(nu: LogForm1, omega: LogForm1, cfg: QuadConfig = QuadConfig()) -> Estimate:
    """``(2 pi i)^-1`` times the sphere integral of ``nu ^ conj(omega)``."""
    return integrate_sphere(nu, omega, cfg).scaled(1 / TWO_PI_I)


def _check_modulus(a) -> complex:
    a = as_point(a)
    if is_inf(a) or a == 0 or a == 1:
        raise DegenerateModulus(f"a = {a} is a marked point")
    return a


def sv_log(a, cfg: QuadConfig = QuadConfig()) -> Estimate:
    """Single-valued logarithm ``log|a|^2`` from the sphere integral.

    The direct value ``2 ln|a|`` and the residual are in the diagnostics.
    """
    a = _check_modulus(a)
    est = sv_pairing(c0_dual_path(1, a), LogForm1(((1, 0),)), cfg)
    direct = 2.0 * math.log(abs(a))
    est.diagnostics["direct"] = direct
    est.diagnostics["residual"] = abs(est.value - direct)
    return est


def double_copy_check(nu: LogForm1, omega: LogForm1, gammas: Sequence[Chain], deltas: Sequence[Chain],
                      cfg: QuadConfig = QuadConfig()) -> DoubleCopyReport:
    """Compare the sphere integral with the bilinear expression in path periods.

    The coefficients are the inverse transpose of the intersection matrix of
    ``gammas`` against ``deltas``; ``omega`` is integrated over the pointwise
    conjugates of ``deltas``.
    """
    M = intersection_matrix(gammas, deltas)
    C = dual_pairing_matrix(M)
    lhs = integrate_sphere(nu, omega, cfg)
    p_nu = [integrate_path(nu, g, cfg) for g in gammas]
    p_om = [integrate_path(omega, d.conjugate(), cfg) for d in deltas]
    rhs, err, terms = 0j, 0.0, []
    for i, pi in enumerate(p_nu):
        for j, pj in enumerate(p_om):
            c = C[i][j]
            if c == 0:
                continue
            rhs += float(c) * pi.value * pj.value
            err += abs(float(c)) * (pi.abs_error * abs(pj.value) + pj.abs_error * abs(pi.value)
                                    + pi.abs_error * pj.abs_error)
            terms.append((c, pi, pj))
    return DoubleCopyReport(lhs, rhs, tuple(terms), err, abs(lhs.value - rhs),
                            tuple(tuple(r) for r in M))


def log_family_bases(a) -> tuple[list[Chain], list[Chain]]:
    """Bases for the logarithm example with A = {0, inf}, B = {1, a}.

    gammas (for nu): a ray from 0 to infinity and a positive loop around 1;
    deltas (for dz/z): a positive loop around 0 and a path from 1 to a
    (radially to |a|, then along the circle |z| = |a|).
    """
    a = _check_modulus(a)
    phi = cmath.phase(a) / 2 + math.pi
    ray = Chain.of(Segment(0, INF, cmath.exp(1j * phi)))
    r1 = 0.5 * min(1.0, abs(a - 1))
    if abs(r1 - abs(abs(a) - 1)) < 1e-3 * r1:
        r1 *= 0.8
    # keep the loop's seam away from the point where the path 1 -> a leaves it
    if abs(abs(a) - 1) > 1e-12:
        seam = math.pi if abs(a) > 1 else 0.0
    else:
        seam = -math.copysign(math.pi / 2, cmath.phase(a))
    loop1 = Chain.of(*circle(1, r1, start_angle=seam))
    loop0 = Chain.of(*circle(0, 0.4 * min(1.0, abs(a))))
    pieces = []
    if abs(abs(a) - 1) > 1e-12:
        pieces.append(Segment(1, abs(a)))
    if abs(cmath.phase(a)) > 1e-12:
        pieces.append(Arc(0, abs(a), 0.0, cmath.phase(a)))
    path = Chain.of(*pieces)
    return [ray, loop1], [loop0, path]


def log_family_double_copy(a, cfg: QuadConfig = QuadConfig()) -> DoubleCopyReport:
    gammas, deltas = log_family_bases(a)
    return double_copy_check(c0_dual_path(1, a), LogForm1(((1, 0),)), gammas, deltas, cfg)


def log_family_period_matrix(a, cfg: QuadConfig = QuadConfig()) -> PeriodMatrix:
    """Periods of {dz/(a-1), dz/z} over {path 1 -> a, positive loop around 0}."""
    a = _check_modulus(a)
    _, (loop0, path) = log_family_bases(a)
    forms = [LogForm1((), (1 / (a - 1),)), LogForm1(((1, 0),))]
    return period_matrix(None, forms, [path, loop0], cfg)


# ---------------------------------------------------------------- MZVs


def sv_mzv(indices: Sequence[int], mcfg: McConfig = McConfig()) -> Estimate:
    """Single-valued MZV as a volume integral over C^n, n = sum(indices).

    The value is the real part; the imaginary part and its standard error are
    kept in the diagnostics. The overall sign is ``(-1)^(n(n+1)/2) (2 pi i)^-n``.
    """
    idx = _check_indices(indices)
    n = sum(idx)
    raw = integrate_mc(mzv_nu(n), mzv_omega(idx), mcfg)
    k = (-1) ** (n * (n + 1) // 2) / TWO_PI_I ** n
    z = raw.value * k
    scale = abs(k)
    # with k real or imaginary the real part comes from one component of raw
    comp = "stderr_re" if abs(k.real) >= abs(k.imag) else "stderr_im"
    other = "stderr_im" if comp == "stderr_re" else "stderr_re"
    diag = dict(raw.diagnostics)
    diag.update(imag=z.imag, stderr_real=raw.diagnostics[comp] * scale,
                stderr_imag=raw.diagnostics[other] * scale, raw_value=raw.value)
    return Estimate(complex(z.real), raw.diagnostics[comp] * scale, raw.evals, "montecarlo", diag)


def _polylog_half(word: Sequence[int], x: float = 0.5, tol: float = 1e-16) -> float:
    """``int_{0<t_1<...<t_m<x} w_{e_1}(t_1)...w_{e_m}(t_m)`` with w_0 = dt/t, w_1 = dt/(1-t).

    The word must start with 1 (or be empty); it equals the nested series
    ``sum_{0<k_1<...<k_s} x^{k_s} / (k_1^{a_1} ... k_s^{a_s})``.
    """
    if not word:
        return 1.0
    if word[0] != 1:
        raise ValueError("word must start with the letter 1")
    exps = []
    for e in word:
        if e == 1:
            exps.append(1)
        else:
            exps[-1] += 1
    s = len(exps)
    # bound sum_{k>K} x^k (1 + ln k)^(s-1) <= x^K (1 + ln K)^(s-1) / (1 - x)
    K = 8
    while x ** K * (1 + math.log(K)) ** (s - 1) / (1 - x) > tol:
        K += 8
    k = np.arange(1, K + 1, dtype=float)
    inner = np.ones(K)  # nested sums over k_1 < ... < k_j, indexed by k_j
    for j, a in enumerate(exps):
        terms = inner / k ** a
        if j == s - 1:
            return math.fsum(terms * x ** k)
        # strictly increasing: next level uses cumulative sums over smaller k
        inner = np.concatenate([[0.0], np.cumsum(terms)[:-1]])
    raise AssertionError


def mzv_series(indices: Sequence[int], terms: int | None = None) -> float:
    """``zeta(n_1, ..., n_r) = sum_{0<k_1<...<k_r} 1/(k_1^n_1 ... k_r^n_r)``.

    Computed by splitting the iterated integral at 1/2: prefixes are series
    at 1/2 and suffixes map to series at 1/2 under t -> 1 - t, so the
    truncation error is geometric. ``terms`` optionally caps the truncation
    (the default gives a tail below 1e-12).
    """
    idx = _check_indices(indices)
    word = []
    for m in idx:
        word += [1] + [0] * (m - 1)
    tol = 1e-16 if terms is None else 0.5 ** terms
    total = []
    for cut in range(len(word) + 1):
        head = word[:cut]
        tail = [1 - e for e in reversed(word[cut:])]
        total.append(_polylog_half(head, tol=tol) * _polylog_half(tail, tol=tol))
    return math.fsum(total)


@dataclass(frozen=True)
class FubiniReport:
    residual: float
    product: complex
    product_error: float
    volume: Estimate

    @property
    def combined_error(self) -> float:
        return self.volume.abs_error + self.product_error


def fubini_check(a, b, cfg: QuadConfig = QuadConfig(), mcfg: McConfig = McConfig()) -> FubiniReport:
    """Volume integral over C^2 of the product forms against ``sv_log(a) * sv_log(b)``.

    The product cycle gets the form ``(-1)^(1*1) nu_a ^ nu_b``.
    """
    a, b = _check_modulus(a), _check_modulus(b)
    la, lb = sv_log(a, cfg), sv_log(b, cfg)
    nu = (-1) * c0_dual_path(1, a).to_formn().wedge(c0_dual_path(1, b).to_formn())
    dz = LogForm1(((1, 0),)).to_formn()
    omega = dz.wedge(dz)
    vol = integrate_mc(nu, omega, mcfg).scaled(1 / TWO_PI_I ** 2)
    prod = la.value * lb.value
    perr = la.abs_error * abs(lb.value) + lb.abs_error * abs(la.value)
    return FubiniReport(abs(vol.value - prod), prod, perr, vol)
