import cmath
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from svperiod.errors import DivergentIndex, EqualEndpoints, FactorAbsent, InputError, NotLogarithmic, OnSingularLocus
from svperiod.forms import (
    LinFactor,
    LogForm1,
    LogFormN,
    c0_dual_hypercube,
    c0_dual_path,
    eval_form,
    iterated_residue,
    leray_residue,
    mzv_letters,
    mzv_nu,
    mzv_omega,
    residue_coeff,
)
from svperiod.geom import INF, Chain, Segment, boundary, hypercube_corner_boundary

TWO_PI_I = 2j * math.pi
DZ_Z = LogForm1(((1, 0),))


def test_residue_coeff_examples():
    assert residue_coeff(DZ_Z, 0) == 1
    assert residue_coeff(DZ_Z, INF) == -1
    assert residue_coeff(DZ_Z, 5) == 0
    b1, b2 = 1 + 1j, -2
    assert residue_coeff(c0_dual_path(b1, b2), b1) == -1


points = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(points, points), min_size=0, max_size=6))
def test_global_residue_theorem(terms):
    f = LogForm1(tuple(terms))
    total = sum(residue_coeff(f, p) for p in f.finite_poles()) + residue_coeff(f, INF)
    assert abs(total) <= 1e-12 * max(1.0, sum(abs(c) for c, _ in terms))


def test_c0_dual_path_examples():
    a = 2 + 1j
    assert c0_dual_path(1, a) == LogForm1.dlog(zeros=[a], poles=[1])
    assert c0_dual_path(0, 1) == LogForm1(((1, 1), (-1, 0)))
    assert c0_dual_path(1, "inf") == LogForm1(((-1, 1),))
    with pytest.raises(EqualEndpoints):
        c0_dual_path(2, 2)


@given(points, points)
def test_path_form_matches_boundary(b1, b2):
    if abs(b1 - b2) < 1e-6:
        return
    f = c0_dual_path(b1, b2)
    bd = boundary(Chain.of(Segment(b1, b2)))
    for p in (b1, b2, b1 + b2 + 100, INF):
        expected = bd.get(p, 0) if p is not INF else 0
        assert residue_coeff(f, p) == expected


def test_higher_order_pole_flag():
    f = LogForm1(((1, 0),), (1.0,))
    assert not f.is_logarithmic
    with pytest.raises(NotLogarithmic):
        f.to_formn()
    with pytest.raises(InputError):
        LogForm1(((1, "inf"),))


# ---------------------------------------------------------------- Leray residues


def test_leray_one_dimensional():
    assert iterated_residue(c0_dual_hypercube(1), [1]) == 1
    # (2 pi i)^-1 dz / (z (1 - z)), written as -(2 pi i)^-1 dz / (z (z - 1))
    g = LogFormN(1, ((-1, (LinFactor.const(1, 0), LinFactor.const(1, 1))),), twist=-1)
    assert leray_residue(g, LinFactor.const(1, 1)) == -1


def test_leray_two_dimensional_corner():
    g = LogFormN(2, ((1, (LinFactor.const(1, 0), LinFactor.const(1, 1), LinFactor.const(2, 0), LinFactor.const(2, 1))),),
                 twist=-2)  # (2 pi i)^-2 dz1 dz2 / (z1 (z1 - 1) z2 (z2 - 1)) = displayed integrand
    assert iterated_residue(g, [1, 1]) == 1


def test_factor_absent():
    with pytest.raises(FactorAbsent):
        leray_residue(c0_dual_hypercube(2), LinFactor.const(1, 5))


def test_factor_free_terms_drop_out():
    f = LogFormN(1, ((1, (LinFactor.const(1, 0),)), (1, (LinFactor.const(1, 3),))))
    assert leray_residue(f, LinFactor.const(1, 0)) == TWO_PI_I


@pytest.mark.parametrize("n,sign", [(1, -1), (2, -1), (3, 1)])
def test_c0_hypercube_prefactor(n, sign):
    f = c0_dual_hypercube(n)
    t = np.full(n, 0.3 + 0.2j)
    expected = sign * TWO_PI_I ** (-n) / np.prod(t * (1 - t))
    assert abs(f(t) - expected) < 1e-12 * abs(expected)


def test_c0_hypercube_n1_matches_path_form():
    f = c0_dual_hypercube(1)
    g = c0_dual_path(0, 1)
    for z in (0.3 + 0.4j, -2.0, 5j):
        assert abs(f(np.array([z])) - g(z) / TWO_PI_I) < 1e-14


@pytest.mark.parametrize("n", [1, 2, 3])
def test_c0_recipe_all_orders(n):
    """Residues along any order of hyperplanes match the signed corner boundary."""
    form = c0_dual_hypercube(n)
    sign = (-1) ** (n * (n - 1) // 2)
    corners = hypercube_corner_boundary(n)
    for corner, coeff in corners.items():
        assert iterated_residue(form, corner) == sign * coeff
        for order in itertools.permutations(range(n)):
            # eliminate coordinates in the given order; later indices shift down
            out, remaining = form, list(range(n))
            for k in order:
                pos = remaining.index(k)
                out = leray_residue(out, LinFactor.const(pos + 1, corner[k]))
                remaining.pop(pos)
            # the iterated boundary taken in this order carries the sign of the permutation
            assert out * _permutation_sign(order) == sign * coeff


def _permutation_sign(order) -> int:
    s = 1
    order = list(order)
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if order[i] > order[j]:
                s = -s
    return s


# ---------------------------------------------------------------- MZV forms


def test_mzv_letters():
    assert mzv_letters([2]) == [1, 0]
    assert mzv_letters([1, 2]) == [1, 1, 0]
    with pytest.raises(DivergentIndex):
        mzv_letters([2, 1])
    with pytest.raises(InputError):
        mzv_letters([0, 2])


@pytest.mark.parametrize("idx,sign,letters", [([2], -1, [1, 0]), ([3], -1, [1, 0, 0]), ([1, 2], 1, [1, 1, 0])])
def test_mzv_omega_examples(idx, sign, letters):
    f = mzv_omega(idx)
    t = np.array([0.11 + 0.3j, 0.7 - 0.2j, 2.0 + 1j][: len(letters)])
    expected = sign / np.prod(t - np.array(letters))
    assert abs(f(t) - expected) < 1e-13 * abs(expected)


@given(st.lists(st.integers(1, 3), min_size=1, max_size=3).filter(lambda v: v[-1] >= 2),
       st.lists(st.floats(0.01, 0.99), min_size=9, max_size=9))
def test_mzv_omega_positive_on_simplex(idx, raw):
    n = sum(idx)
    t = np.sort(np.array(raw[:n]))
    if np.any(np.diff(t) <= 0):
        return
    v = mzv_omega(idx)(t)
    assert v.real > 0 and abs(v.imag) <= 1e-12 * v.real


@pytest.mark.parametrize("n", [1, 2, 3])
def test_mzv_nu_examples(n):
    t = np.array([0.3 + 0.1j, 2.0, 3j][:n])
    ext = np.concatenate([[0], t, [1]])
    den = t[0] * np.prod(np.diff(ext)[1:-1]) * (1 - t[-1])
    assert abs(mzv_nu(n)(t) - 1 / den) < 1e-13 * abs(1 / den)


def test_eval_form_examples():
    assert eval_form(DZ_Z, 2) == 0.5
    assert abs(eval_form(mzv_nu(2), [2, 3j]) - 1 / (2 * (3j - 2) * (1 - 3j))) < 1e-15
    assert abs(eval_form(c0_dual_hypercube(1), [-1]) - 0.5 / TWO_PI_I) < 1e-15
    with pytest.raises(OnSingularLocus):
        eval_form(DZ_Z, 0)
    with pytest.raises(OnSingularLocus):
        eval_form(mzv_nu(2), [0.5, 0.5])


def test_linfactor_canonical():
    s, f = LinFactor.coords(3, 1)
    assert s == -1 and (f.i, f.j) == (1, 3)
    with pytest.raises(InputError):
        LinFactor(2, 1)
    with pytest.raises(NotLogarithmic):
        LogFormN(1, ((1, (LinFactor.const(1, 0), LinFactor.const(1, 0))),))


def test_wedge_renumbers():
    a = c0_dual_path(1, 2).to_formn()
    w = a.wedge(DZ_Z.to_formn())
    t = np.array([0.5j, 3 + 1j])
    assert abs(w(t) - c0_dual_path(1, 2)(t[0]) * DZ_Z(t[1])) < 1e-14
