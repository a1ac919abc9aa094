"""Single-valued periods of elliptic curves from the modular parameter.

Periods and quasi-periods are produced from tau with the Fricke and Legendre
relations; an independent value of the quasi-period comes from Weierstrass
theory via the arithmetic-geometric mean.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NotConvergent
from .svcore import SvMatrix

TWO_PI_I = 2j * math.pi

# constant terms -B_k/(2k) of the sigma-normalised Eisenstein series
EISENSTEIN_CONSTANT = {2: -1 / 24, 4: 1 / 240, 6: -1 / 504}


@dataclass(frozen=True)
class TauPoint:
    """Modular parameter ``tau`` and normalisation ``omega_1 = 2 pi i * lam``."""

    tau: complex
    lam: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        object.__setattr__(self, "lam", complex(self.lam))
        if not self.tau.imag > 0:
            raise NotConvergent("tau must lie in the upper half plane")
        if self.lam == 0:
            raise InputError("lambda must be nonzero")


def _nome(tau: complex) -> complex:
    if not complex(tau).imag > 0:
        raise NotConvergent("q-series need Im(tau) > 0")
    return cmath.exp(TWO_PI_I * tau)


def divisor_sigma(p: int, N: int) -> np.ndarray:
    """``sigma_p(n)`` for n = 1..N."""
    out = np.zeros(N + 1)
    for d in range(1, N + 1):
        out[d::d] += float(d) ** p
    return out[1:]


def eisenstein(k: int, tau: complex, eps: float = 1e-15) -> complex:
    """``c_k + sum_n sigma_{k-1}(n) q^n`` with q = exp(2 pi i tau).

    Evaluated as the Lambert series ``sum_n n^(k-1) q^n / (1 - q^n)``; the
    dropped tail is below ``sum_{n>N} n^(k-1) |q|^n / (1 - |q|) < eps``.
    """
    if k not in EISENSTEIN_CONSTANT:
        raise InputError("weight must be 2, 4 or 6")
    q = _nome(tau)
    aq = abs(q)
    N = 1
    while True:
        # for n > N the terms n^(k-1)|q|^n decrease with ratio at most r
        r = ((N + 2) / (N + 1)) ** (k - 1) * aq
        if r < 1:
            tail = (N + 1) ** (k - 1) * aq ** (N + 1) / ((1 - r) * (1 - aq))
            if tail < eps:
                break
        N += 1
    n = np.arange(1, N + 1, dtype=float)
    qn = q ** n
    return EISENSTEIN_CONSTANT[k] + complex(np.sum(n ** (k - 1) * qn / (1 - qn)))


def g2star(tau: complex, eps: float = 1e-15) -> complex:
    """Non-holomorphic weight-2 Eisenstein series ``G_2 + 1/(8 pi Im tau)``."""
    tau = complex(tau)
    return eisenstein(2, tau, eps) + 1 / (8 * math.pi * tau.imag)


def g2star_modularity_residual(tau: complex, matrix=(0, -1, 1, 0), eps: float = 1e-15) -> float:
    """``|G2*(g tau) - (c tau + d)^2 G2*(tau)|`` for g = (a, b, c, d) in SL2(Z)."""
    a, b, c, d = (int(x) for x in matrix)
    if a * d - b * c != 1:
        raise InputError("matrix must have determinant 1")
    tau = complex(tau)
    return abs(g2star((a * tau + b) / (c * tau + d), eps) - (c * tau + d) ** 2 * g2star(tau, eps))


@dataclass(frozen=True)
class EllipticCurveData:
    omega1: complex
    omega2: complex
    eta1: complex
    eta2: complex
    g2q: complex
    g4q: complex
    g6q: complex
    m_tau: complex
    point: TauPoint
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def legendre_residual(self) -> float:
        return abs(self.omega1 * self.eta2 - self.eta1 * self.omega2 - TWO_PI_I)

    def period_matrix(self) -> np.ndarray:
        """Rows: the two cycles; columns: dx/y and x dx/y."""
        return np.array([[self.omega1, self.eta1], [self.omega2, self.eta2]])


def weierstrass_invariants(omega1: complex, tau: complex, eps: float = 1e-15) -> tuple[complex, complex]:
    """``(g2, g3)`` of the lattice Z omega1 + Z tau omega1."""
    e4 = 240 * eisenstein(4, tau, eps)
    e6 = -504 * eisenstein(6, tau, eps)
    g2 = (4 * math.pi ** 4 / 3) * e4 / omega1 ** 4
    g3 = (8 * math.pi ** 6 / 27) * e6 / omega1 ** 6
    return g2, g3


def curve_data(p: TauPoint, eps: float = 1e-15) -> EllipticCurveData:
    """Periods from tau: Fricke gives eta1, Legendre gives eta2."""
    tau = p.tau
    w1 = TWO_PI_I * p.lam
    w2 = tau * w1
    g2 = eisenstein(2, tau, eps)
    eta1 = -2 * TWO_PI_I ** 2 * g2 / w1
    eta2 = (TWO_PI_I + eta1 * w2) / w1
    m = -8 * math.pi * tau.imag * g2star(tau, eps)
    u, v = weierstrass_invariants(w1, tau, eps)
    return EllipticCurveData(w1, w2, eta1, eta2, g2, eisenstein(4, tau, eps), eisenstein(6, tau, eps), m, p,
                             {"weierstrass_g2": u, "weierstrass_g3": v})


def sv_matrix_elliptic(p: TauPoint, eps: float = 1e-15) -> SvMatrix:
    """Closed form of ``Pbar^-1 P`` for the basis (dx/y, x dx/y).

    ``diag(1/conj(lam), conj(lam)) [[m(conj tau), (|m|^2 - 1)/(4 pi Im tau)],
    [-4 pi Im tau, -m(tau)]] diag(lam, 1/lam)``, with m(conj tau) read as conj(m(tau)).
    """
    d = curve_data(p, eps)
    y = p.tau.imag
    m, mb = d.m_tau, d.m_tau.conjugate()
    core = np.array([[mb, (m * mb - 1) / (4 * math.pi * y)], [-4 * math.pi * y, -m]])
    lam = p.lam
    S = np.diag([1 / lam.conjugate(), lam.conjugate()]) @ core @ np.diag([lam, 1 / lam])
    P = d.period_matrix()
    direct = np.linalg.solve(np.conj(P), P)
    checks = {
        "S_Sbar_minus_I": float(np.linalg.norm(S @ np.conj(S) - np.eye(2), 2)),
        "S2_minus_I": float(np.linalg.norm(S @ S - np.eye(2), 2)),
        "trace": abs(complex(np.trace(S))),
        "det_plus_1": abs(complex(np.linalg.det(S)) + 1),
        "closed_form_vs_periods": float(np.linalg.norm(S - direct, 2)),
    }
    return SvMatrix(S, checks, float(np.linalg.cond(np.conj(P))))


def has_real_structure(p: TauPoint, tol: float = 1e-12) -> bool:
    """Whether complex conjugation preserves the lattice with its basis up to sign.

    This holds for Re(tau) in (1/2)Z with lambda real or purely imaginary; only
    then is the single-valued matrix an involution with vanishing trace (in
    general only S conj(S) = I holds).
    """
    x = 2 * p.tau.real
    lam = p.lam
    return abs(x - round(x)) <= tol and min(abs(lam.imag), abs(lam.real)) <= tol * abs(lam)


def area_pairing(p: TauPoint) -> complex:
    """``(2 pi i)^-1`` times the integral of ``(dx/y) ^ conj(dx/y)``: ``-4 pi |lam|^2 Im tau``."""
    return complex(-4 * math.pi * abs(p.lam) ** 2 * p.tau.imag)


def area_pairing_quadrature(p: TauPoint, nodes: int = 8) -> complex:
    """Same pairing by Gauss-Legendre quadrature over the period parallelogram.

    dx/y pulls back to ``omega1 dz`` and ``dz ^ conj(dz) = -2i dA``; the map
    (s, t) -> s + t tau has Jacobian Im tau.
    """
    _, w = np.polynomial.legendre.leggauss(nodes)
    ws = 0.5 * w  # weights on [0, 1]
    omega1 = TWO_PI_I * p.lam
    density = -2j * abs(omega1) ** 2 * np.ones((nodes, nodes))
    integral = np.einsum("i,j,ij->", ws, ws, density) * p.tau.imag
    return complex(integral / TWO_PI_I)


# ---------------------------------------------------------------- AGM oracle


def agm(a: complex, b: complex, tol: float = 1e-15) -> complex:
    """Complex arithmetic-geometric mean with the 'right' square-root choices."""
    a, b = complex(a), complex(b)
    for _ in range(100):
        an = 0.5 * (a + b)
        bn = cmath.sqrt(a * b)
        if abs(an - bn) > abs(an + bn):
            bn = -bn
        if abs(an - bn) <= tol * abs(an) or (an, bn) == (a, b):
            return an
        a, b = an, bn
    raise NotConvergent("AGM did not converge")


def elliptic_ke(k: complex) -> tuple[complex, complex]:
    """Complete elliptic integrals ``(K(k), E(k))`` by the AGM (k is the modulus)."""
    kp = cmath.sqrt(1 - k * k)
    a, b = 1.0 + 0j, kp
    c_sum = 0.5 * k * k
    power = 0.5
    if kp == 0:
        raise NotConvergent("K diverges at k = 1")
    for _ in range(100):
        an = 0.5 * (a + b)
        bn = cmath.sqrt(a * b)
        if abs(an - bn) > abs(an + bn):
            bn = -bn
        c = 0.5 * (a - b)
        power *= 2
        c_sum += power * c * c
        stalled = (an, bn) == (a, b)
        a, b = an, bn
        if abs(a - b) <= 1e-15 * abs(a) or stalled:
            break
    else:
        raise NotConvergent("AGM did not converge")
    K = math.pi / (2 * a)
    return K, K * (1 - c_sum)


def _lattice_coords(z: complex, w1: complex, w2: complex) -> np.ndarray:
    M = np.array([[w1.real, w2.real], [w1.imag, w2.imag]])
    return np.linalg.solve(M, np.array([z.real, z.imag]))


def weierstrass_eta_oracle(p: TauPoint, eps: float = 1e-15) -> complex:
    """Quasi-period of ``omega1`` in the sign convention of :func:`curve_data`.

    Roots e_i of 4x^3 - g2 x - g3 give a half period K(k)/sqrt(e1 - e3) and
    zeta at it, sqrt(e1 - e3) E(k) - e1 K(k)/sqrt(e1 - e3), with
    k^2 = (e2 - e3)/(e1 - e3). Root orderings are searched until the two half
    periods span the lattice; the Weierstrass quasi-period is then carried to
    omega1 by integrality, using Legendre's relation for the second generator.
    Only Eisenstein series of weights 4 and 6 enter, never weight 2.
    """
    w1 = TWO_PI_I * p.lam
    w2 = p.tau * w1
    g2, g3 = weierstrass_invariants(w1, p.tau, eps)
    roots = np.roots([4, 0, -g2, -g3])
    for e1, e2, e3 in itertools.permutations(roots):
        s = cmath.sqrt(e1 - e3)
        k = cmath.sqrt((e2 - e3) / (e1 - e3))
        kp = cmath.sqrt(1 - k * k)
        try:
            K, E = elliptic_ke(k)
            Kp, _ = elliptic_ke(kp)
        except NotConvergent:
            continue
        a = 2 * K / s  # full period
        b = 2j * Kp / s
        ca, cb = _lattice_coords(a, w1, w2), _lattice_coords(b, w1, w2)
        if not (np.allclose(ca, np.round(ca), atol=1e-8) and np.allclose(cb, np.round(cb), atol=1e-8)):
            continue
        ia, ib = np.round(ca).astype(int), np.round(cb).astype(int)
        det = ia[0] * ib[1] - ia[1] * ib[0]
        if abs(det) != 1:
            continue
        eta_a = 2 * (s * E - e1 * K / s)  # Weierstrass eta(a) = 2 zeta(a/2)
        # Legendre: eta(a) b - eta(b) a = 2 pi i * sign(Im(b/a))
        sgn = 1 if (b / a).imag > 0 else -1
        eta_b = (eta_a * b - sgn * TWO_PI_I) / a
        # omega1 = x a + y b
        x, y = np.round(_lattice_coords(w1, a, b)).astype(int)
        return -(x * eta_a + y * eta_b)
    raise NotConvergent("no root ordering produced a lattice basis")


def fricke_residual(p: TauPoint, eps: float = 1e-15) -> float:
    """``|G_2(tau) + (1/2) omega1 eta1 / (2 pi i)^2|`` with eta1 from the AGM oracle."""
    eta1 = weierstrass_eta_oracle(p, eps)
    w1 = TWO_PI_I * p.lam
    return abs(eisenstein(2, p.tau, eps) + 0.5 * w1 * eta1 / TWO_PI_I ** 2)
