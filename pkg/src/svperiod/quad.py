"""Integration engines.

* ``integrate_path``: adaptive Gauss-Kronrod (7/15) along segments, rays and arcs.
* ``integrate_sphere``: integrals of ``nu ^ conj(omega)`` over P^1(C). The
  sphere is split into the disk ``|z| <= R`` and the disk ``|w| <= 1/R`` in
  the chart ``w = 1/z``. Around every finite singular point a smooth bump
  function carves out a polar patch; inside the patch the integrand times the
  polar Jacobian is smooth, and what remains is smooth everywhere. All pieces
  are integrated in polar coordinates with a tensor 2D Gauss-Kronrod rule and
  global adaptive bisection.
* ``integrate_mc``: importance-sampled Monte Carlo over C^n.
"""
from __future__ import annotations

import heapq
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    InputError,
    NonConvergent,
    NonIntegrableDetected,
    NotLogarithmic,
    OverlappingPoles,
    PoleOnPath,
    UnboundedTestFunction,
)
from .forms import LogForm1, LogFormN
from .geom import Arc, Chain, Segment, is_inf

# QUADPACK qk15 abscissae (descending, last = 0) and weights
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

# full 15-point rule on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
W_K = np.concatenate([_WGK[:-1], _WGK[::-1]])
W_G = np.zeros(15)
W_G[1:7:2] = _WG[:3]
W_G[7] = _WG[3]
W_G[9:14:2] = _WG[:3][::-1]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Estimate:
    value: complex
    abs_error: float
    evals: int
    method: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.abs_error >= 0 and math.isfinite(self.abs_error)):
            raise ValueError(f"invalid error bound {self.abs_error}")
        if self.method not in ("adaptive1d", "sphere2d", "montecarlo", "closed_form"):
            raise ValueError(f"unknown method {self.method}")

    @property
    def samples_or_evals(self) -> int:
        return self.evals

    def scaled(self, k: complex) -> "Estimate":
        return replace(self, value=self.value * k, abs_error=self.abs_error * abs(k),
                       diagnostics=dict(self.diagnostics))

    def __add__(self, other: "Estimate") -> "Estimate":
        return Estimate(self.value + other.value, self.abs_error + other.abs_error,
                        self.evals + other.evals, self.method)


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float | None = None
    abs_tol: float = 1e-13
    max_subdivisions: int = 20000
    guard_distance: float = 1e-6
    chart_radius: float | None = None
    patch_radius_fraction: float = 0.45

    def __post_init__(self):
        if self.rel_tol is not None and not self.rel_tol > 0:
            raise InputError("rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise InputError("max_subdivisions must be >= 1")
        if not 0 < self.patch_radius_fraction <= 0.5:
            raise InputError("patch_radius_fraction must lie in (0, 1/2]")
        if self.chart_radius is not None and not self.chart_radius > 0:
            raise InputError("chart_radius must be positive")

    def tol(self, method: str) -> float:
        if self.rel_tol is not None:
            return self.rel_tol
        return 1e-10 if method == "adaptive1d" else 1e-6


# ---------------------------------------------------------------- 1D


def _pieces_of(piece):
    """Parametrisation ``t in [0,1] -> (z, dz/dt)`` of a piece (vectorised)."""
    if isinstance(piece, Arc):
        c, r, a, b = piece.center, piece.radius, piece.theta_start, piece.theta_end

        def par(t):
            e = r * np.exp(1j * (a + (b - a) * t))
            return c + e, 1j * (b - a) * e

        n0 = max(1, int(math.ceil(abs(b - a) / (math.pi / 2))))
        return par, n0
    if piece.is_ray:
        s, d = piece.start, piece.direction

        def par(t):
            # t in [0,1) -> s + d t/(1-t); the endpoint t = 1 is never sampled
            u = 1.0 - t
            return s + d * t / u, d / (u * u)

        return par, 4
    s, e = piece.start, piece.end

    def par(t):
        return s + (e - s) * t, np.full_like(t, e - s, dtype=complex)

    return par, 1


def _gk_batch(f, lo: np.ndarray, hi: np.ndarray):
    """Kronrod value, error and absolute mass for many intervals at once."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    v = f(x)
    k = half * (v @ W_K)
    g = half * (v @ W_G)
    mass = np.abs(half) * (np.abs(v) @ W_K)
    err = np.maximum(np.abs(k - g), 50 * _EPS * mass)
    return k, err, mass


# when the value cancels, accuracy is measured against this fraction of the
# integral of the absolute value instead
CANCELLATION_FLOOR = 1e-3


def adaptive_1d(f: Callable, breakpoints: Sequence[float], tol_rel: float, tol_abs: float,
                max_subdivisions: int) -> tuple[complex, float, int]:
    """Globally adaptive G7/K15 integration of a vectorised complex function."""
    bp = np.asarray(breakpoints, dtype=float)
    lo, hi = bp[:-1].copy(), bp[1:].copy()
    k, err, mass = _gk_batch(f, lo, hi)
    evals = 15 * len(lo)
    heap = [(-e, a, b, kk, mm) for e, a, b, kk, mm in zip(err, lo, hi, k, mass)]
    heapq.heapify(heap)
    total = complex(np.sum(k))
    total_err = float(np.sum(err))
    total_mass = float(np.sum(mass))
    splits = 0
    while total_err > max(tol_abs, tol_rel * max(abs(total), CANCELLATION_FLOOR * total_mass)):
        if splits >= max_subdivisions:
            raise NonConvergent(f"1D quadrature: error {total_err:.3g} after {splits} subdivisions")
        # split the worst intervals carrying half of the error in one batch
        batch = []
        acc = 0.0
        while heap and (not batch or acc < 0.5 * total_err) and len(batch) < 64:
            item = heapq.heappop(heap)
            batch.append(item)
            acc += -item[0]
        a = np.array([b[1] for b in batch])
        b = np.array([b[2] for b in batch])
        m = 0.5 * (a + b)
        nlo = np.concatenate([a, m])
        nhi = np.concatenate([m, b])
        nk, nerr, nmass = _gk_batch(f, nlo, nhi)
        evals += 15 * len(nlo)
        splits += len(batch)
        for item in batch:
            total -= item[3]
            total_err -= -item[0]
            total_mass -= item[4]
        for e, x0, x1, kk, mm in zip(nerr, nlo, nhi, nk, nmass):
            heapq.heappush(heap, (-e, x0, x1, kk, mm))
            total += kk
            total_err += e
            total_mass += mm
        # refresh the running sums to avoid drift
        if splits % 1024 < len(batch):
            total = complex(sum(it[3] for it in heap))
            total_err = float(sum(-it[0] for it in heap))
            total_mass = float(sum(it[4] for it in heap))
    total = complex(sum(it[3] for it in heap))
    total_err = float(sum(-it[0] for it in heap))
    return total, total_err, evals


def _dist_to_piece(p: complex, piece) -> float:
    if isinstance(piece, Arc):
        d = p - piece.center
        phi = math.atan2(d.imag, d.real)
        lo, hi = sorted((piece.theta_start, piece.theta_end))
        off = (phi - lo) % (2 * math.pi)
        best = min(abs(p - piece.start), abs(p - piece.end))
        if off <= hi - lo:
            best = min(best, abs(abs(d) - piece.radius))
        return best
    s = piece.start
    dvec = piece.direction if piece.is_ray else piece.end - piece.start
    t = ((p - s) * dvec.conjugate()).real / abs(dvec) ** 2
    t = max(t, 0.0) if piece.is_ray else min(max(t, 0.0), 1.0)
    return abs(p - (s + t * dvec))


def integrate_path(form: LogForm1, path: Chain, cfg: QuadConfig = QuadConfig()) -> Estimate:
    """``sum_k c_k * integral of form along path_k``."""
    tol = cfg.tol("adaptive1d")
    value, error, evals = 0j, 0.0, 0
    for coeff, piece in path.pieces():
        for a in form.finite_poles():
            if _dist_to_piece(a, piece) < cfg.guard_distance:
                raise PoleOnPath(f"pole {a} within {cfg.guard_distance} of the path")
        if isinstance(piece, Segment) and piece.is_ray:
            if form.polynomial or abs(form.residue_at_infinity) > 0:
                raise PoleOnPath("form has a pole at infinity, where the ray ends")
        par, n0 = _pieces_of(piece)

        def integrand(t, par=par):
            z, dz = par(t)
            return form(z) * dz

        v, e, n = adaptive_1d(integrand, np.linspace(0.0, 1.0, n0 + 1), tol, cfg.abs_tol,
                              cfg.max_subdivisions)
        c = float(coeff)
        value += c * v
        error += abs(c) * e
        evals += n
    return Estimate(value, error, evals, "adaptive1d")


# ---------------------------------------------------------------- 2D


def _tensor_gk(func, rects: np.ndarray):
    """Tensor G7/K15 on rectangles ``[x0, x1, y0, y1]`` (rows)."""
    x0, x1, y0, y1 = rects.T
    hx, hy = 0.5 * (x1 - x0), 0.5 * (y1 - y0)
    mx, my = 0.5 * (x1 + x0), 0.5 * (y1 + y0)
    X = mx[:, None, None] + hx[:, None, None] * NODES[None, :, None]
    Y = my[:, None, None] + hy[:, None, None] * NODES[None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    V = func(X, Y)
    area = hx * hy
    kk = np.einsum("nij,i,j->n", V, W_K, W_K) * area
    gx = np.einsum("nij,i,j->n", V, W_G, W_K) * area
    gy = np.einsum("nij,i,j->n", V, W_K, W_G) * area
    mass = np.einsum("nij,i,j->n", np.abs(V), W_K, W_K) * np.abs(area)
    ex, ey = np.abs(kk - gx), np.abs(kk - gy)
    err = np.maximum(ex + ey, 50 * _EPS * mass)
    return kk, err, ex >= ey, mass


@dataclass
class _Region:
    func: Callable
    rects: np.ndarray


def adaptive_2d(regions: Sequence[_Region], tol_rel: float, tol_abs: float,
                max_subdivisions: int) -> tuple[complex, float, int]:
    """Globally adaptive tensor Gauss-Kronrod over several rectangle families."""
    vals, errs, dirs, rects, owner, masses = [], [], [], [], [], []
    evals = 0
    for r_id, reg in enumerate(regions):
        k, e, d, m = _tensor_gk(reg.func, reg.rects)
        evals += 225 * len(reg.rects)
        vals.append(k), errs.append(e), dirs.append(d), rects.append(reg.rects), masses.append(m)
        owner.append(np.full(len(k), r_id))
    vals = np.concatenate(vals)
    masses = np.concatenate(masses)
    errs = np.concatenate(errs)
    dirs = np.concatenate(dirs)
    rects = np.concatenate(rects)
    owner = np.concatenate(owner)
    splits = 0
    while True:
        total = complex(np.sum(vals))
        total_err = float(np.sum(errs))
        total_mass = float(np.sum(masses))
        if total_err <= max(tol_abs, tol_rel * max(abs(total), CANCELLATION_FLOOR * total_mass)):
            return total, total_err, evals
        if splits >= max_subdivisions:
            raise NonConvergent(f"2D quadrature: error {total_err:.3g} after {splits} subdivisions")
        order = np.argsort(-errs)
        cum = np.cumsum(errs[order])
        # refine the rectangles holding the top half of the error
        nsel = int(np.searchsorted(cum, 0.5 * total_err)) + 1
        nsel = min(max(nsel, 1), 512, max_subdivisions - splits)
        sel = order[:nsel]
        keep = np.ones(len(vals), dtype=bool)
        keep[sel] = False
        new_v, new_e, new_d, new_r, new_o, new_m = [], [], [], [], [], []
        for r_id, reg in enumerate(regions):
            mine = sel[owner[sel] == r_id]
            if len(mine) == 0:
                continue
            rr = rects[mine]
            split_x = dirs[mine]
            x0, x1, y0, y1 = rr.T
            xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            a = np.where(split_x[:, None], np.stack([x0, xm, y0, y1], 1), np.stack([x0, x1, y0, ym], 1))
            b = np.where(split_x[:, None], np.stack([xm, x1, y0, y1], 1), np.stack([x0, x1, ym, y1], 1))
            children = np.concatenate([a, b])
            k, e, d, mm = _tensor_gk(reg.func, children)
            evals += 225 * len(children)
            new_v.append(k), new_e.append(e), new_d.append(d), new_r.append(children), new_m.append(mm)
            new_o.append(np.full(len(k), r_id))
        splits += nsel
        vals = np.concatenate([vals[keep]] + new_v)
        errs = np.concatenate([errs[keep]] + new_e)
        dirs = np.concatenate([dirs[keep]] + new_d)
        rects = np.concatenate([rects[keep]] + new_r)
        owner = np.concatenate([owner[keep]] + new_o)
        masses = np.concatenate([masses[keep]] + new_m)


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


_BUMP_INNER = 0.4


def _bump(s):
    """1 on [0, 0.4], 0 beyond 1, smooth in between."""
    return _smooth_step((1.0 - s) / (1.0 - _BUMP_INNER))


def _patch_radii(points: list[complex], chart_radius: float, fraction: float) -> list[float]:
    radii = []
    for k, p in enumerate(points):
        d = chart_radius - abs(p)
        for q_i, q in enumerate(points):
            if q_i != k:
                d = min(d, abs(p - q))
        radii.append(fraction * d)
    return radii


def _default_chart_radius(points: list[complex]) -> float:
    return 2.0 * max((abs(p) for p in points), default=0.0) + 1.0


def _polar_rects(r_max: float, n_r: int = 2, n_t: int = 4) -> np.ndarray:
    rs = np.linspace(0.0, r_max, n_r + 1)
    ts = np.linspace(0.0, 2 * math.pi, n_t + 1)
    return np.array([[rs[i], rs[i + 1], ts[j], ts[j + 1]] for i in range(n_r) for j in range(n_t)])


def sphere_integral(density_z: Callable, density_w: Callable, singular: Sequence[complex],
                    cfg: QuadConfig, label: str = "sphere2d") -> Estimate:
    """Integral over P^1(C) of a density given in both charts (w.r.t. Lebesgue area).

    ``density_z`` may have integrable ``1/|z - p|`` singularities at the finite
    points ``singular``; ``density_w`` (the same density in ``w = 1/z``,
    Jacobian included) may be singular at ``w = 0`` only.
    """
    pts = [complex(p) for p in singular]
    R = cfg.chart_radius or _default_chart_radius(pts)
    if any(abs(p) >= R for p in pts):
        raise InputError("chart_radius must exceed every finite singular point")
    radii = _patch_radii(pts, R, cfg.patch_radius_fraction)

    def cutoff(z):
        out = np.ones(z.shape)
        for p, rad in zip(pts, radii):
            out = out - _bump(np.abs(z - p) / rad)
        return out

    regions = []
    for p, rad in zip(pts, radii):
        def patch(r, t, p=p, rad=rad):
            z = p + r * np.exp(1j * t)
            return density_z(z) * _bump(r / rad) * r

        regions.append(_Region(patch, _polar_rects(rad)))

    def inner(r, t):
        z = r * np.exp(1j * t)
        c = cutoff(z)
        with np.errstate(all="ignore"):
            v = density_z(z) * c * r
        return np.where(c == 0, 0.0, v)

    def outer(r, t):
        w = r * np.exp(1j * t)
        return density_w(w) * r

    # inner disk: rings follow the patch geometry a little
    n_r = 4 if pts else 2
    regions.append(_Region(inner, _polar_rects(R, n_r, 8)))
    regions.append(_Region(outer, _polar_rects(1.0 / R, 1, 4)))
    tol = cfg.tol("sphere2d")
    total, err, evals = adaptive_2d(regions, tol, cfg.abs_tol, cfg.max_subdivisions)
    return Estimate(total, err, evals, "sphere2d", {"chart_radius": R, "patch_radii": radii})


def _check_log_pair(nu: LogForm1, omega: LogForm1):
    if not (nu.is_logarithmic and omega.is_logarithmic):
        raise NotLogarithmic("sphere integrals need simple poles only")
    shared = set(nu.finite_poles()) & set(omega.finite_poles())
    if shared:
        raise OverlappingPoles(f"shared poles {sorted(shared, key=abs)}")
    scale = 1e-12 * max([1.0] + [abs(c) for c, _ in nu.terms + omega.terms])
    if abs(nu.residue_at_infinity) > scale and abs(omega.residue_at_infinity) > scale:
        raise OverlappingPoles("both forms have a pole at infinity")


def integrate_sphere(nu: LogForm1, omega: LogForm1, cfg: QuadConfig = QuadConfig()) -> Estimate:
    """``integral over P^1(C) of nu ^ conj(omega)``.

    With dz ^ dz-bar = -2i dx ^ dy this is ``-2i * integral f conj(g) dA``
    in any holomorphic chart.
    """
    _check_log_pair(nu, omega)
    pts = sorted(set(nu.finite_poles()) | set(omega.finite_poles()), key=lambda z: (z.real, z.imag))

    def dz(z):
        return nu(z) * np.conj(omega(z))

    def dw(w):
        return nu.in_w_chart(w) * np.conj(omega.in_w_chart(w))

    est = sphere_integral(dz, dw, pts, cfg)
    return est.scaled(-2j)


def sphere_pairing_closed_form(nu: LogForm1, omega: LogForm1) -> complex:
    """``2 pi i * sum r_i conj(s_j) log|a_i - b_j|^2`` over finite poles.

    Stokes on the complement of small disks: with the residue at infinity of
    one form vanishing, the log-radius terms at infinity cancel.
    """
    _check_log_pair(nu, omega)
    total = 0j
    for r, a in nu.terms:
        for s, b in omega.terms:
            total += r * np.conj(s) * math.log(abs(a - b) ** 2)
    return 2j * math.pi * total


# ---------------------------------------------------------------- Cauchy-Stokes


@dataclass(frozen=True)
class RadialTest:
    """``psi(|z|^2) = num(u)/den(u)``, coefficients in increasing degree of ``u = |z|^2``."""

    num: tuple
    den: tuple = (1.0,)

    def __post_init__(self):
        num = np.polynomial.Polynomial(self.num).trim()
        den = np.polynomial.Polynomial(self.den).trim()
        if den.degree() == 0 and den.coef[0] == 0:
            raise UnboundedTestFunction("zero denominator")
        if num.degree() > den.degree() and np.any(num.coef[den.degree() + 1:] != 0):
            raise UnboundedTestFunction("psi grows at infinity")
        for root in den.roots():
            if abs(root.imag) < 1e-12 and root.real >= -1e-12:
                raise UnboundedTestFunction(f"psi has a pole at |z|^2 = {root.real:g}")
        object.__setattr__(self, "num", tuple(float(c) for c in num.coef))
        object.__setattr__(self, "den", tuple(float(c) for c in den.coef))

    def _polys(self):
        return np.polynomial.Polynomial(self.num), np.polynomial.Polynomial(self.den)

    def __call__(self, u):
        n, d = self._polys()
        return n(u) / d(u)

    def derivative(self, u):
        n, d = self._polys()
        return (n.deriv()(u) * d(u) - n(u) * d.deriv()(u)) / d(u) ** 2

    def at_infinity(self) -> float:
        n, d = self._polys()
        if n.degree() < d.degree():
            return 0.0
        return float(n.coef[-1] / d.coef[-1]) if len(n.coef) == len(d.coef) else 0.0

    def inverted(self) -> "RadialTest":
        """``v -> psi(1/v)`` as a rational function of ``v``."""
        deg = max(len(self.num), len(self.den)) - 1
        num = list(self.num) + [0.0] * (deg + 1 - len(self.num))
        den = list(self.den) + [0.0] * (deg + 1 - len(self.den))
        return RadialTest(tuple(num[::-1]), tuple(den[::-1]))

    def value_at(self, p) -> float:
        if is_inf(p):
            return self.at_infinity()
        return float(self(abs(p) ** 2))


def cauchy_stokes_pairing(omega: LogForm1, psi: RadialTest, cfg: QuadConfig = QuadConfig()) -> Estimate:
    """``(1/2 pi i) * integral over P^1(C) of omega ^ d(psi o conj)``.

    The diagnostics carry the residue predictor ``sum_p res_p(omega) psi(p)``.
    """
    if not omega.is_logarithmic:
        raise NotLogarithmic("omega must have simple poles")
    inv = psi.inverted()
    pts = sorted(set(omega.finite_poles()), key=lambda z: (z.real, z.imag))

    # omega ^ d psi = w(z) z psi'(|z|^2) dz ^ dz-bar; times 1/(2 pi i) and -2i
    def dz(z):
        return -omega(z) * z * psi.derivative(np.abs(z) ** 2) / math.pi

    def dw(w):
        return -omega.in_w_chart(w) * w * inv.derivative(np.abs(w) ** 2) / math.pi

    est = sphere_integral(dz, dw, pts, cfg)
    predicted = sum(c * psi.value_at(a) for c, a in omega.terms)
    predicted += omega.residue_at_infinity * psi.at_infinity()
    est.diagnostics["residue_prediction"] = complex(predicted)
    return est


# ---------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True)
class McConfig:
    samples: int = 1_000_000
    seed: int = 0
    chunks: int = 64
    proposal_centers: tuple | None = None
    radial: str = "logcauchy"
    log_scale: float = 1.5
    tail_exponent: float = 1.0
    batch: int = 1 << 17
    check_integrability: bool = True
    exact_last: bool = True

    def __post_init__(self):
        if not (self.samples >= self.chunks >= 2):
            raise InputError("need samples >= chunks >= 2")
        if not 0 <= self.seed < 2 ** 64:
            raise InputError("seed must be a 64-bit unsigned integer")
        if not self.tail_exponent > 0:
            raise InputError("tail_exponent must be positive")
        if self.radial not in ("logcauchy", "pareto"):
            raise InputError("radial must be 'logcauchy' or 'pareto'")
        if not self.log_scale > 0:
            raise InputError("log_scale must be positive")


class _Pareto:
    """Radius with density ``alpha / (1 + r)^(1 + alpha)``."""

    def __init__(self, alpha: float):
        self.alpha = alpha

    def sample(self, u):
        return (1.0 - u) ** (-1.0 / self.alpha) - 1.0

    def planar_density(self, r):
        a = self.alpha
        return a / (2 * math.pi * r * (1.0 + r) ** (1.0 + a))


class _LogCauchy:
    """Radius whose logarithm is Cauchy distributed with scale ``sigma``.

    The planar density behaves like ``1/(r^2 log^2 r)`` at both ends, so the
    ratio integrand/proposal stays bounded near nested clusters of singular
    points (t_1 << t_2 << 1) and at infinity, where power-law proposals give
    divergent variance.
    """

    def __init__(self, sigma: float):
        self.sigma = sigma

    def sample(self, u):
        with np.errstate(over="ignore"):
            return np.exp(self.sigma * np.tan(math.pi * (u - 0.5)))

    def planar_density(self, r):
        with np.errstate(divide="ignore"):
            x = np.log(r) / self.sigma
        return 1.0 / (2 * math.pi ** 2 * self.sigma * (1.0 + x * x) * r * r)


@dataclass(frozen=True)
class _Proposal:
    """Sequential mixture proposal over C^n.

    Coordinate k is drawn from an equal-weight mixture of radial densities
    centred at fixed constants and at previously drawn coordinates it is
    coupled to (via a factor t_k - t_j).
    """

    centers: tuple  # per coordinate: tuple of complex constants
    links: tuple  # per coordinate: tuple of earlier coordinate indices (0-based)
    law: object

    def sample(self, rng: np.random.Generator, m: int):
        n = len(self.centers)
        t = np.empty((m, n), dtype=complex)
        logq = np.zeros(m)
        for k in range(n):
            cands = [np.full(m, c, dtype=complex) for c in self.centers[k]]
            cands += [t[:, j] for j in self.links[k]]
            C = np.stack(cands, axis=1)
            pick = rng.integers(0, C.shape[1], size=m)
            u = rng.random(m)
            th = rng.random(m) * (2 * math.pi)
            with np.errstate(all="ignore"):
                # overflowing radii give NaN points; their weight is set to 0
                r = self.law.sample(u)
                t[:, k] = C[np.arange(m), pick] + r * np.exp(1j * th)
            with np.errstate(all="ignore"):
                dens = self.law.planar_density(np.abs(t[:, k][:, None] - C)).mean(axis=1)
                logq += np.log(dens)
        return t, logq


def _proposal_for(nu: LogFormN, omega: LogFormN, mcfg: McConfig, dim: int | None = None) -> _Proposal:
    """Mixture proposal over the first ``dim`` coordinates (default: all).

    When the last coordinate is integrated out, the remaining integrand is
    singular wherever two of its poles in that coordinate meet, so those
    pole positions become extra centres and links.
    """
    n = nu.n
    dim = n if dim is None else dim
    pairs = nu.couplings() | omega.couplings()
    if mcfg.proposal_centers is not None:
        centers = tuple(tuple(complex(c) for c in cs) for cs in mcfg.proposal_centers)
        if len(centers) < dim:
            raise InputError("proposal_centers needs one list per coordinate")
        centers = centers[:dim]
    else:
        cs = []
        hidden = set(nu.constants_for(n)) | set(omega.constants_for(n)) if dim < n else set()
        for k in range(1, dim + 1):
            found = set(nu.constants_for(k)) | set(omega.constants_for(k))
            if (k, n) in pairs and dim < n:
                found |= hidden
            cs.append(tuple(sorted(found or {0j}, key=lambda z: (z.real, z.imag))))
        centers = tuple(cs)
    if dim < n:
        tied = sorted(i for i, j in pairs if j == n)
        pairs = {(i, j) for i, j in pairs if j < n}
        pairs |= {(i, j) for i in tied for j in tied if i < j}
    links = tuple(tuple(sorted(i - 1 for i, j in pairs if j == k + 1)) for k in range(dim))
    law = _LogCauchy(mcfg.log_scale) if mcfg.radial == "logcauchy" else _Pareto(mcfg.tail_exponent)
    return _Proposal(centers, links, law)


def _last_coordinate_fractions(form: LogFormN):
    """Partial fractions of ``form`` in its last coordinate.

    Returns a function of the other coordinates ``s`` (shape (m, n-1)) giving
    ``{pole key: (position, residue)}`` with ``form = sum residue/(t_n - position)``,
    or None when a term does not involve the last coordinate.
    """
    n = form.n
    split = []
    for coef, facs in form.terms:
        inner, outer = [], []
        for f in facs:
            if f.j == n:
                inner.append((-1, ("c", f.i), f))  # t_i - t_n = -(t_n - t_i)
            elif f.j is None and f.i == n:
                inner.append((1, ("a", complex(f.a)), f))
            else:
                outer.append(f)
        if not inner:
            return None
        split.append((complex(coef) * form.prefactor(), inner, outer))

    def fractions(s: np.ndarray) -> dict:
        m = s.shape[0]
        pad = np.concatenate([s, np.zeros((m, 1), dtype=complex)], axis=1)
        out: dict = {}
        for coef, inner, outer in split:
            base = np.full(m, coef, dtype=complex)
            for f in outer:
                base = base / f.evaluate(pad)
            pos = []
            for sign, (kind, val), _f in inner:
                base = base * sign
                pos.append(s[:, val - 1] if kind == "c" else np.full(m, val, dtype=complex))
            for a, (_sign, key, _f) in enumerate(inner):
                res = base.copy()
                for b in range(len(inner)):
                    if b != a:
                        res = res / (pos[a] - pos[b])
                if key in out:
                    out[key] = (out[key][0], out[key][1] + res)
                else:
                    out[key] = (pos[a], res)
        return out

    return fractions


def _exact_last_integrand(nu: LogFormN, omega: LogFormN):
    """``s -> integral over t_n of f(s, t_n) conj(g(s, t_n)) dA``, or None if unavailable.

    The inner integral of ``sum r_p/(t - p) * conj(sum s_q/(t - q))`` over C
    equals ``-pi sum r_p conj(s_q) log|p - q|^2`` provided one of the residue
    sums vanishes identically (decay at infinity) and no pole is shared.
    """
    n = nu.n
    if n < 2:
        return None
    fn, fo = _last_coordinate_fractions(nu), _last_coordinate_fractions(omega)
    if fn is None or fo is None:
        return None
    probe = np.random.default_rng(12345).normal(size=(4, n - 1)) + 1j * np.random.default_rng(54321).normal(size=(4, n - 1))
    with np.errstate(all="ignore"):
        pn, po = fn(probe), fo(probe)
        if set(pn) & set(po):
            return None
        sums = [sum(r for _, r in d.values()) for d in (pn, po)]
        scale = [sum(np.abs(r) for _, r in d.values()) for d in (pn, po)]
    if not any(np.all(np.abs(sm) <= 1e-9 * sc) for sm, sc in zip(sums, scale)):
        return None

    def inner(s):
        dn, do = fn(s), fo(s)
        total = np.zeros(s.shape[0], dtype=complex)
        for p, r in dn.values():
            for q, c in do.values():
                total = total + r * np.conj(c) * np.log(np.abs(p - q) ** 2)
        return -math.pi * total

    return inner


def _pairwise_sum(x: np.ndarray):
    if len(x) <= 2:
        return x.sum()
    h = len(x) // 2
    return _pairwise_sum(x[:h]) + _pairwise_sum(x[h:])


def _chunk_sizes(samples: int, chunks: int) -> list[int]:
    base, extra = divmod(samples, chunks)
    return [base + (1 if c < extra else 0) for c in range(chunks)]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SVPERIOD_THREADS", "1")))
    except ValueError:
        return 1


def integrate_mc(nu: LogFormN, omega: LogFormN, mcfg: McConfig = McConfig()) -> Estimate:
    """Unbiased estimate of ``integral over C^n of nu ^ conj(omega)``.

    ``nu ^ conj(omega) = (-1)^(n(n-1)/2) (-2i)^n f conj(g) dV`` for the
    standard orientation of C^n.
    """
    if nu.n != omega.n or nu.n < 1:
        raise InputError("forms must share a dimension n >= 1")
    n = nu.n
    inner = _exact_last_integrand(nu, omega) if mcfg.exact_last else None
    if inner is None:
        prop = _proposal_for(nu, omega, mcfg)

        def density(t):
            return nu(t) * np.conj(omega(t))
    else:
        prop = _proposal_for(nu, omega, mcfg, n - 1)
        density = inner
    prop_dim = len(prop.centers)
    const = (-1) ** (n * (n - 1) // 2) * (-2j) ** n
    sizes = _chunk_sizes(mcfg.samples, mcfg.chunks)
    seeds = np.random.SeedSequence(mcfg.seed).spawn(mcfg.chunks)

    def run_chunk(c: int):
        rng = np.random.Generator(np.random.PCG64(seeds[c]))
        acc = []
        left = sizes[c]
        while left > 0:
            m = min(left, mcfg.batch)
            t, logq = prop.sample(rng, m)
            with np.errstate(all="ignore"):
                w = density(t) * np.exp(-logq)
            w[~np.isfinite(w)] = 0.0  # measure-zero hits of the singular locus
            acc.append(_pairwise_sum(w))
            left -= m
        return complex(_pairwise_sum(np.array(acc))) / sizes[c]

    workers = min(_threads(), mcfg.chunks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            means = np.array(list(ex.map(run_chunk, range(mcfg.chunks))))
    else:
        means = np.array([run_chunk(c) for c in range(mcfg.chunks)])

    weights = np.array(sizes, dtype=float) / mcfg.samples
    mean = complex(_pairwise_sum(means * weights))
    spread = np.sqrt(np.var(means.real, ddof=1) + np.var(means.imag, ddof=1))
    stderr = float(spread / math.sqrt(mcfg.chunks))
    stderr_re = float(np.std(means.real, ddof=1) / math.sqrt(mcfg.chunks))
    stderr_im = float(np.std(means.imag, ddof=1) / math.sqrt(mcfg.chunks))
    half = mcfg.chunks // 2
    diag = {
        "stderr_re": stderr_re * abs(const),
        "stderr_im": stderr_im * abs(const),
        "chunk_max_dev": float(np.max(np.abs(means - mean))) * abs(const),
        "chunks": mcfg.chunks,
        "sampled_dimension": prop_dim,
    }
    if half >= 2:
        s_half = float(np.sqrt(np.var(means[:half].real, ddof=1) + np.var(means[:half].imag, ddof=1)))
        ratio = spread / s_half if s_half > 0 else 1.0
        diag["spread_growth"] = float(ratio)
        if mcfg.check_integrability and ratio > 25:
            raise NonIntegrableDetected(
                f"chunk spread grew by {ratio:.1f}x between the first half and all chunks")
    return Estimate(const * mean, stderr * abs(const), mcfg.samples, "montecarlo", diag)
