import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from svperiod.errors import DuplicatePoint, InputError, NonGenericIntersection, OverlappingDivisors, SingularMatrix
from svperiod.geom import (
    INF,
    Arc,
    Chain,
    Segment,
    boundary,
    circle,
    dual_pairing_matrix,
    hypercube_corner_boundary,
    intersection_matrix,
    intersection_number,
    rational_inverse,
    validate_configuration,
)
from svperiod.svcore import log_family_bases


def test_configurations():
    cfg = validate_configuration([0, "inf"], [1, 2])
    assert cfg.A == (0j, INF)
    with pytest.raises(OverlappingDivisors):
        validate_configuration([0], [0])
    assert validate_configuration([], [0, 1]).A == ()
    with pytest.raises(DuplicatePoint):
        validate_configuration([0, 0], [1])


def test_piece_validation():
    with pytest.raises(InputError):
        Segment(1, 1)
    with pytest.raises(InputError):
        Arc(0, 0.0, 0, 1)
    with pytest.raises(InputError):
        Chain.of(Segment(0, 1), Segment(2, 3))
    with pytest.raises(InputError):
        Chain.of(Segment(0, "inf", 1), Segment(1, 2))
    assert Segment(2, "inf").direction == 1


def test_boundaries():
    a = 2 + 1j
    assert boundary(Chain.of(Segment(1, a))) == {a: 1, 1: -1}
    assert boundary(Chain.of(*circle(0, 1))) == {}
    c = 2 * Chain.of(Segment(0, 1)) - Chain.of(Segment(0, 2))
    assert boundary(c) == {1: 2, 2: -1, 0: -1}


def test_reversal_negates_boundary():
    c = Chain.of(Segment(0, 1), Arc(0, 1, 0, 2))
    b, rb = boundary(c), boundary(c.reversed())
    assert set(b) == set(rb) and all(rb[p] == -b[p] for p in b)


def _brute_crossings(p1, p2, n=20000):
    """Signed crossings by dense polyline sampling: sign of cross(tangent1, tangent2)."""
    t = np.linspace(0, 1, n)
    z1, z2 = p1(t), p2(t)
    total = 0
    for i in range(n - 1):
        a, b = z1[i], z1[i + 1]
        d1 = b - a
        # vectorised segment test against all pieces of the other curve
        c, d = z2[:-1], z2[1:]
        d2 = d - c
        den = d1.real * d2.imag - d1.imag * d2.real
        with np.errstate(divide="ignore", invalid="ignore"):
            s = ((c - a).real * d2.imag - (c - a).imag * d2.real) / den
            u = ((c - a).real * d1.imag - (c - a).imag * d1.real) / den
        hit = (s >= 0) & (s < 1) & (u >= 0) & (u < 1) & (den != 0)
        total += int(np.sum(np.sign(den[hit])))
    return total


def test_ray_vs_circle_sign_by_brute_force():
    ray = Chain.of(Segment(0, INF, 1j))
    loop = Chain.of(*circle(0, 0.5))
    got = intersection_number(ray, loop)
    brute = _brute_crossings(lambda t: 1j * 3 * t, lambda t: 0.5 * np.exp(2j * math.pi * t))
    assert got == brute == 1


def test_disjoint_chains():
    assert intersection_number(Chain.of(Segment(0, 1)), Chain.of(Segment(2j, 3 + 2j))) == 0


def test_tangency_is_rejected():
    with pytest.raises(NonGenericIntersection):
        intersection_number(Chain.of(Segment(-1 + 1j, 1 + 1j)), Chain.of(*circle(0, 1)))
    with pytest.raises(NonGenericIntersection):
        intersection_number(Chain.of(Segment(0, 1)), Chain.of(Segment(1, 1 + 1j)))


def test_log_family_matrix_and_duals():
    g, d = log_family_bases(2)
    M = intersection_matrix(g, d)
    assert M == [[1, 0], [0, -1]]
    C = dual_pairing_matrix(M)
    assert C == [[1, 0], [0, -1]]


@pytest.mark.parametrize("a", [2, -3, 0.5 + 0.5j, 3j, cmath.exp(1j), -0.4])
def test_log_family_matrix_invertible_everywhere(a):
    g, d = log_family_bases(a)
    M = intersection_matrix(g, d)
    assert abs(M[0][0] * M[1][1] - M[0][1] * M[1][0]) == 1


_segments = st.tuples(*[st.floats(-3, 3) for _ in range(4)]).filter(
    lambda v: math.hypot(v[2] - v[0], v[3] - v[1]) > 0.1)


@given(_segments, _segments)
def test_antisymmetry_and_reversal(s1, s2):
    c1 = Chain.of(Segment(complex(s1[0], s1[1]), complex(s1[2], s1[3])))
    c2 = Chain.of(Segment(complex(s2[0], s2[1]), complex(s2[2], s2[3])))
    try:
        k = intersection_number(c1, c2)
    except NonGenericIntersection:
        return
    assert intersection_number(c2, c1) == -k
    assert intersection_number(c1.reversed(), c2) == -k


def test_chain_bilinearity():
    c1 = Chain.of(Segment(-1j, 1j))
    c2 = Chain.of(Segment(-1, 1))
    k = intersection_number(c1, c2)
    assert intersection_number(Fraction(3, 2) * c1, c2 - 2 * c2) == -Fraction(3, 2) * k


@pytest.mark.parametrize("M,expected", [
    ([[1, 0], [0, -1]], [[1, 0], [0, -1]]),
    ([[2]], [[Fraction(1, 2)]]),
    ([[0, 1], [1, 0]], [[0, 1], [1, 0]]),
])
def test_dual_pairing_examples(M, expected):
    assert dual_pairing_matrix(M) == expected


def test_singular_matrix():
    with pytest.raises(SingularMatrix):
        rational_inverse([[1, 2], [2, 4]])


@given(st.integers(1, 6).flatmap(lambda k: st.lists(
    st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=6), min_size=k, max_size=k),
    min_size=k, max_size=k)))
def test_dual_pairing_exact(M):
    try:
        C = dual_pairing_matrix(M)
    except SingularMatrix:
        return
    k = len(M)
    prod = [[sum(C[l][i] * M[l][j] for l in range(k)) for j in range(k)] for i in range(k)]
    assert prod == [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]


def test_hypercube_boundary():
    assert hypercube_corner_boundary(1) == {(0,): -1, (1,): 1}
    b3 = hypercube_corner_boundary(3)
    assert b3[(1, 1, 1)] == 1 and b3[(0, 0, 0)] == -1 and len(b3) == 8
