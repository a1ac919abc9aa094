"""Acceptance suite: one test per criterion, each printing a single pass/fail line."""
import cmath
import json
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from svperiod import elliptic, heights
from svperiod.cli import random_divisor_pair
from svperiod.forms import LogForm1, c0_dual_hypercube, iterated_residue
from svperiod.geom import dual_pairing_matrix, hypercube_corner_boundary, intersection_matrix
from svperiod.quad import McConfig, RadialTest, cauchy_stokes_pairing
from svperiod.svcore import (
    fubini_check,
    log_family_bases,
    log_family_double_copy,
    log_family_period_matrix,
    mzv_series,
    sv_log,
    sv_matrix,
    sv_mzv,
)

TWO_PI_I = 2j * math.pi
FULL_SAMPLES = 10_000_000


@pytest.fixture
def verdict(capsys):
    """Print one line per criterion (outside capture) and assert it."""

    def emit(number: int, title: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number} {title}: {detail}")
        assert ok, detail

    return emit


def test_c01_lefschetz(verdict):
    t0 = time.perf_counter()
    est = cauchy_stokes_pairing(LogForm1(((1, 0),)), RadialTest((0.0, 1.0), (1.0, 1.0)))
    dt = time.perf_counter() - t0
    err = abs(est.value + 1)
    verdict(1, "Lefschetz pairing", err <= 1e-8 and dt < 5, f"|value + 1| = {err:.2e} <= 1e-8, {dt:.2f}s < 5s")


def test_c02_sv_log(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for a in (2, 3, 1 + 1j, -5, 0.3):
        worst = max(worst, abs(sv_log(a).value - 2 * math.log(abs(a))))
    dt = time.perf_counter() - t0
    verdict(2, "single-valued logarithm", worst <= 1e-6 and dt < 30,
            f"max |sv_log(a) - 2 ln|a|| = {worst:.2e} <= 1e-6, {dt:.2f}s < 30s")


def test_c03_double_copy(verdict):
    t0 = time.perf_counter()
    rep = log_family_double_copy(2)
    dt = time.perf_counter() - t0
    budget = 1e-4 * abs(TWO_PI_I * math.log(4))
    ok = rep.residual <= 3 * rep.combined_error and rep.combined_error <= budget and dt < 60
    verdict(3, "double copy at a = 2", ok,
            f"residual {rep.residual:.2e} <= 3 x {rep.combined_error:.2e}, error {rep.combined_error:.2e} <= "
            f"{budget:.2e}, {dt:.2f}s < 60s")


def test_c04_sv_matrix_relations(verdict):
    rng = np.random.default_rng(2024)
    moduli = []
    while len(moduli) < 10:
        a = cmath.rect(rng.uniform(0.2, 5.0), rng.uniform(-math.pi, math.pi))
        if abs(a - 1) > 0.2:
            moduli.append(a)
    worst_entry = worst_inv = 0.0
    for a in moduli:
        S = sv_matrix(log_family_period_matrix(a))
        expected = np.array([[1, math.log(abs(a) ** 2)], [0, -1]])
        worst_entry = max(worst_entry, float(np.abs(S.entries - expected).max()))
        worst_inv = max(worst_inv, S.checks["S2_minus_I"])
    verdict(4, "sv matrix relations", worst_entry <= 1e-6 and worst_inv <= 1e-8,
            f"max entry error {worst_entry:.2e} <= 1e-6, max ||S^2 - I|| {worst_inv:.2e} <= 1e-8 over 10 random a")


def _exact_identity(M) -> bool:
    C = dual_pairing_matrix(M)
    k = len(M)
    return all(sum(C[l][i] * M[l][j] for l in range(k)) == (1 if i == j else 0) for i in range(k) for j in range(k))


def test_c05_duality_exactness(verdict):
    g, d = log_family_bases(2)
    ok = _exact_identity(intersection_matrix(g, d))
    rng = np.random.default_rng(5)
    count = 0
    while count < 20:
        k = int(rng.integers(1, 7))
        M = [[Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 5))) for _ in range(k)] for _ in range(k)]
        if abs(np.linalg.det(np.array(M, dtype=float))) < 1e-9:
            continue
        ok = ok and _exact_identity(M)
        count += 1
    verdict(5, "intersection duality", ok, "dual^T M = I exactly for the log basis and 20 random rational matrices")


def test_c06_c0_recipe(verdict):
    ok = True
    for n in (1, 2, 3):
        sign = (-1) ** (n * (n - 1) // 2)
        form = c0_dual_hypercube(n)
        ok = ok and all(iterated_residue(form, k) == sign * c for k, c in hypercube_corner_boundary(n).items())
    verdict(6, "c0 dual recipe", ok, "iterated residues equal signed corner boundaries exactly for n = 1, 2, 3")


ELLIPTIC_POINTS = ((1j, 1), (0.5 + 0.7j, 0.5j), (1.5 + 1.3j, 2j), (-0.5 + 2.1j, -1.5), (0.5 + 0.8660254037844386j, 1))


def test_c07_elliptic_identities(verdict):
    t0 = time.perf_counter()
    fr = g2 = rel = 0.0
    for tau, lam in ELLIPTIC_POINTS:
        p = elliptic.TauPoint(tau, lam)
        fr = max(fr, elliptic.fricke_residual(p))
        g2 = max(g2, elliptic.g2star_modularity_residual(tau))
        c = elliptic.sv_matrix_elliptic(p).checks
        rel = max(rel, c["S2_minus_I"], c["trace"], c["det_plus_1"])
    dt = time.perf_counter() - t0
    ok = fr <= 1e-8 and g2 <= 1e-9 and rel <= 1e-9 and dt < 30
    verdict(7, "elliptic identities", ok,
            f"Fricke {fr:.2e} <= 1e-8, G2* {g2:.2e} <= 1e-9, S^2/trace/det {rel:.2e} <= 1e-9, {dt:.2f}s < 30s")


def test_c08_heights(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    ok, worst_ratio, worst_err = True, 0.0, 0.0
    for _ in range(25):
        D, E = random_divisor_pair(rng)
        h, h2 = heights.height_pairing(D, E), heights.height_pairing(E, D)
        diff = abs(h.value.real - heights.green_closed_form(D, E))
        worst_ratio = max(worst_ratio, diff / (3 * h.abs_error))
        worst_err = max(worst_err, h.abs_error)
        ok = ok and diff <= 3 * h.abs_error and h.abs_error <= 1e-4
        ok = ok and abs(h.value - h2.value) <= 3 * (h.abs_error + h2.abs_error)
    for D, f in (
        (heights.DivisorDeg0.of([(1, 2), (-1, 3)]), heights.RationalFunction(zeros=((0, 1),))),
        (heights.DivisorDeg0.of([(1, 0), (-1, "inf")]), heights.RationalFunction(zeros=((5, 1),), poles=((-5, 1),))),
        (heights.DivisorDeg0.of([(2, 1j), (-1, 2 + 2j), (-1, -3)]),
         heights.RationalFunction(zeros=((0.5, 2),), poles=((-1, 1), (4j, 1)), scale=2 - 1j)),
    ):
        pc = heights.principal_check(D, f)
        ok = ok and pc.residual <= 3 * pc.pairing.abs_error
    dt = time.perf_counter() - t0
    ok = ok and dt < 300
    verdict(8, "height pairing", ok,
            f"25 pairs: max |h - green| / (3 abs_error) = {worst_ratio:.2f} <= 1, max abs_error {worst_err:.1e} "
            f"<= 1e-4, symmetry and principal law hold, {dt:.1f}s < 300s")


@pytest.mark.slow
def test_c09_sv_mzv(verdict):
    cfg = McConfig(samples=FULL_SAMPLES, seed=0)
    t0 = time.perf_counter()
    z2 = sv_mzv([2], cfg)
    t2 = time.perf_counter() - t0
    z3 = sv_mzv([3], cfg)
    t3 = time.perf_counter() - t0 - t2
    target = 2 * mzv_series([3])
    ok2 = abs(z2.value) <= max(3 * z2.abs_error, 0.02) and z2.abs_error <= 0.02 and t2 < 900
    ok3 = abs(z3.value - target) <= max(3 * z3.abs_error, 0.12) and z3.abs_error <= 0.08 and t3 < 900
    verdict(9, "single-valued zeta values", ok2 and ok3,
            f"zeta_sv(2) = {z2.value.real:+.4f} +- {z2.abs_error:.4f} (stderr <= 0.02), "
            f"zeta_sv(3) = {z3.value.real:.4f} +- {z3.abs_error:.4f} vs {target:.7f} (stderr <= 0.08), "
            f"{t2:.0f}s / {t3:.0f}s")


@pytest.mark.slow
def test_c10_fubini(verdict):
    t0 = time.perf_counter()
    rep = fubini_check(2, 3, mcfg=McConfig(samples=FULL_SAMPLES, seed=0))
    dt = time.perf_counter() - t0
    ok = rep.residual <= 3 * rep.combined_error and dt < 600
    verdict(10, "Fubini", ok, f"residual {rep.residual:.2e} <= 3 x {rep.combined_error:.2e}, {dt:.0f}s < 600s")


def test_c11_determinism(verdict):
    outs = []
    for _ in range(2):
        proc = subprocess.run([sys.executable, "-m", "svperiod.cli", "selftest", "fast", "--seed", "0", "--json"],
                              capture_output=True, text=True, check=False)
        d = json.loads(proc.stdout)
        d.pop("wall_time_ms")
        outs.append((proc.returncode, json.dumps(d, sort_keys=True, indent=2)))
    ok = outs[0] == outs[1] and outs[0][0] == 0
    verdict(11, "determinism", ok, "two selftest fast runs give byte-identical reports without timing, exit 0")
