from __future__ import annotations

import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from conftest import curve
from minheight.curve import (
    CurveMismatchError,
    CurveModel,
    SingularCurveError,
    is_minimal,
    minimal_model,
    parse_ainvs,
    torsion_test,
)
from minheight.qfield import QuadField, canonicalize, rational


def test_invariants_y2_x3_minus_x():
    E = CurveModel.from_ainvs([0, 0, 0, -1, 0])
    assert E.discriminant == 64 and E.c4 == 48 and E.j_invariant == 1728


def test_invariants_1470l1():
    E = curve("1470l1")
    assert E.b_invariants == (5, -5979, 284589, -8581374)
    assert E.discriminant == -553190400000
    assert E.bad_primes == (2, 3, 5, 7)
    assert is_minimal(E)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=5, max_size=5))
def test_discriminant_matches_sympy(a):
    # oracle: (2y + a1 x + a3)^2 = g(x) and disc(E) = disc(g) / 16
    x = sympy.Symbol("x")
    a1, a2, a3, a4, a6 = a
    g = 4 * (x**3 + a2 * x**2 + a4 * x + a6) + (a1 * x + a3) ** 2
    D = sympy.discriminant(sympy.Poly(g, x)) / 16
    if D == 0:
        with pytest.raises(SingularCurveError):
            CurveModel.from_ainvs(a)
        return
    E = CurveModel.from_ainvs(a)
    assert E.discriminant == Fraction(int(D))
    assert E.j_invariant == Fraction(E.c4**3) / E.discriminant


def test_singular_rejected():
    with pytest.raises(SingularCurveError):
        CurveModel.from_ainvs([0, 0, 0, 0, 0])


def test_parse_ainvs():
    assert parse_ainvs("[1, 1, 1, -2990, 71147]")[3] == -2990
    assert parse_ainvs("[0,0,0,1/2,0]")[3] == Fraction(1, 2)
    with pytest.raises(ValueError):
        parse_ainvs("[1,2,3]")
    with pytest.raises(ValueError):
        parse_ainvs("1,2,3,4,5")


def test_multiples_of_37a1_generator(e37):
    # published multiples nP of (0,0) on y^2 + y = x^3 - x
    P = e37.point(0, 0)
    xs = [Fraction(0), 1, -1, 2, Fraction(1, 4), 6, Fraction(-5, 9), Fraction(21, 25)]
    for n, x in enumerate(xs, 1):
        Q = P * n
        assert Q.on_curve()
        assert Q.x == rational(x)


def test_group_law_properties(e37):
    P = e37.point(0, 0)
    Q = e37.point(1, 0)
    R = e37.point(-1, -1)
    assert (P + Q) + R == P + (Q + R)
    assert P + (-P) == e37.infinity()
    assert P - P == e37.infinity()
    assert P + e37.infinity() == P
    assert P.double() == P + P
    assert P * 0 == e37.infinity()
    assert P * -3 == -(P * 3)


def test_group_law_over_quadratic_field(e37):
    F = QuadField(33)
    pts = e37.lift_x(canonicalize(5, 1, 2, 33))
    assert pts
    P = pts[0]
    Q = e37.point(0, 0)
    S = P + Q
    assert S.on_curve() and S.min_field == F
    assert (S - Q) == P
    assert (P + P.conjugate()).min_field.is_rational


def test_curve_mismatch(e37):
    E2 = curve("389a1")
    with pytest.raises(CurveMismatchError):
        e37.point(0, 0) + E2.point(0, 0)


def test_lift_x_examples(e1470):
    pts = e1470.lift_x(rational(27))
    assert {str(P.y) for P in pts} == {"91", "-119"}
    E = CurveModel.from_ainvs([0, 0, 0, -1, 0])
    assert E.lift_x(rational(2)) == []
    pts = E.lift_x(rational(2), QuadField(6))
    assert len(pts) == 2 and all(P.min_field == QuadField(6) for P in pts)


def test_minimal_model_scaled():
    E = CurveModel.from_ainvs([0, 0, 0, 0, 64])
    M, (u, r, s, t) = minimal_model(E)
    assert M.ainvs == (0, 0, 0, 0, 1) and abs(u) == 2
    assert E.transform(u, r, s, t) == M


def test_minimal_model_random_transforms():
    rng = random.Random(7)
    for name in ("37a1", "11a1", "1470l1", "14a1"):
        E = curve(name)
        for _ in range(4):
            u = Fraction(rng.choice([1, 2, 3, 6]), rng.choice([1, 2, 5]))
            r, s, t = (Fraction(rng.randint(-9, 9), rng.choice([1, 2, 3])) for _ in range(3))
            F = E.transform(u, r, s, t)
            M, tr = minimal_model(F)
            assert M.discriminant == E.discriminant
            assert M.j_invariant == E.j_invariant
            assert F.transform(*tr) == M


def test_point_change_model_roundtrip(e37):
    P = e37.point(2, -3)
    Q = P.change_model(2, 1, -1, 3)
    assert Q.on_curve()
    F = Q.curve
    assert F == e37.transform(2, 1, -1, 3)


def test_torsion_rational():
    E11 = curve("11a1")
    assert torsion_test(E11.point(5, 5))
    assert (E11.point(5, 5) * 5).is_infinity
    E36 = curve("36a1")
    assert torsion_test(E36.point(2, 3)) and torsion_test(E36.point(-1, 0))
    assert not torsion_test(curve("37a1").point(0, 0))


def test_torsion_quadratic():
    E = CurveModel.from_ainvs([0, 0, 0, -1, 0])
    i = canonicalize(0, 1, 1, -1)
    P = E.point(i, 1 - i)
    assert torsion_test(P) and (P * 4).is_infinity and not (P * 2).is_infinity


def test_min_field_attribution():
    E = CurveModel.from_ainvs([0, 0, 0, -1, 0])
    P = E.lift_x(rational(2), QuadField(6))[0]
    assert P.degree == 2 and P.min_field == QuadField(6)
    assert E.point(0, 0).degree == 1
