from __future__ import annotations

import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from minheight.qfield import (
    QQ,
    FieldMismatchError,
    InvalidFieldError,
    QuadElement,
    QuadField,
    canonicalize,
    enumerate_fields,
    field_discriminant,
    parse_element,
    sqrt_in_field,
    weil_height,
)

DS = [-15, -11, -7, -5, -3, -2, -1, 2, 3, 5, 6, 7, 10, 13, 33]


def elements(d=None):
    dd = st.sampled_from(DS) if d is None else st.just(d)
    return st.builds(
        lambda a, b, c, d: canonicalize(a, b, c, d),
        st.integers(-50, 50),
        st.integers(-50, 50),
        st.integers(1, 30),
        dd,
    )


def test_canonicalize_examples():
    x = canonicalize(2, 2, 4, 5)
    assert (x.a, x.b, x.c, x.d) == (1, 1, 2, 5)
    y = canonicalize(3, 0, 1, 7)
    assert y.is_rational and y.field == QQ and y.to_fraction() == 3
    z = canonicalize(0, 2, 1, 8)
    assert (z.a, z.b, z.c, z.d) == (0, 4, 1, 2)


def test_canonicalize_errors():
    with pytest.raises(ZeroDivisionError):
        canonicalize(1, 1, 0, 5)
    with pytest.raises(InvalidFieldError):
        QuadField(12)
    with pytest.raises(InvalidFieldError):
        QuadField(0)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(DS).flatmap(lambda d: st.tuples(elements(d), elements(d))))
def test_field_axioms(xy):
    x, y = xy
    assert x + y == y + x
    assert x * y == y * x
    assert (x + y) - y == x
    if x:
        assert x * x.inverse() == QuadElement(1, 0, 1, 1)
    assert x.conjugate().conjugate() == x
    n = x * x.conjugate()
    assert n.is_rational and n.to_fraction() == x.norm()


@settings(max_examples=40, deadline=None)
@given(elements())
def test_minpoly_matches_sympy(x):
    # oracle: sympy's minimal polynomial of the same algebraic number
    t = sympy.Symbol("t")
    expr = (sympy.Integer(x.a) + x.b * sympy.sqrt(x.d)) / x.c
    mp = sympy.Poly(sympy.minimal_polynomial(expr, t), t)
    coeffs = [int(c) for c in mp.all_coeffs()]
    if coeffs[0] < 0:
        coeffs = [-c for c in coeffs]
    assert tuple(coeffs) == x.minpoly()


def _oracle_height(x: QuadElement) -> float:
    coeffs = x.minpoly()
    roots = sympy.Poly(coeffs, sympy.Symbol("t")).nroots(n=30)
    M = abs(coeffs[0]) * math.prod(max(1.0, abs(complex(r))) for r in roots)
    return math.log(M) / (len(coeffs) - 1)


@settings(max_examples=40, deadline=None)
@given(elements())
def test_weil_height_oracle(x):
    h = weil_height(x)
    assert abs(float(h.mid()) - _oracle_height(x)) < 1e-12


def test_weil_height_examples():
    assert abs(float(weil_height(canonicalize(27, 0, 1, 1)).mid()) - math.log(27)) < 1e-15
    gold = canonicalize(1, 1, 2, 5)
    assert abs(float(weil_height(gold).mid()) - math.log((1 + 5**0.5) / 2) / 2) < 1e-15
    assert abs(float(weil_height(canonicalize(0, 1, 1, 2)).mid()) - math.log(2) / 2) < 1e-15
    assert float(weil_height(canonicalize(1, 1, 2, -3)).mid()) == 0


@settings(max_examples=40, deadline=None)
@given(elements())
def test_weil_height_galois_and_inverse(x):
    h = float(weil_height(x).mid())
    assert abs(h - float(weil_height(x.conjugate()).mid())) < 1e-12
    if x:
        assert abs(h - float(weil_height(x.inverse()).mid())) < 1e-12


@settings(max_examples=60, deadline=None)
@given(elements())
def test_sqrt_of_square(x):
    y = x * x
    r = sqrt_in_field(y, x.field)
    assert r is not None and r * r == y


def test_sqrt_examples():
    assert sqrt_in_field(canonicalize(2, 0, 1, 1)) is None
    r = sqrt_in_field(canonicalize(2, 0, 1, 1), QuadField(2))
    assert r == canonicalize(0, 1, 1, 2)
    r = sqrt_in_field(canonicalize(-1, 0, 1, 1), QuadField(-1))
    assert r * r == canonicalize(-1, 0, 1, 1)
    with pytest.raises(FieldMismatchError):
        sqrt_in_field(canonicalize(0, 1, 1, 2), QuadField(3))


def test_field_discriminant_rule():
    for d in range(-60, 61):
        if d in (0, 1) or not all(e == 1 for e in sympy.factorint(abs(d)).values()):
            continue
        assert QuadField(d).disc == (d if d % 4 == 1 else 4 * d)
    assert field_discriminant(1) == 1


def test_enumerate_fields_against_bruteforce():
    cap = 200
    got = enumerate_fields(cap)
    assert got[0] == QQ
    expect = {QQ}
    for d in range(-cap, cap + 1):
        if d in (0, 1) or not all(e == 1 for e in sympy.factorint(abs(d)).values()):
            continue
        if abs(d if d % 4 == 1 else 4 * d) <= cap:
            expect.add(QuadField(d))
    assert set(got) == expect and len(got) == len(expect)
    keys = [F.sort_key() for F in got[1:]]
    assert keys == sorted(keys)


def test_enumerate_fields_small():
    assert [F.disc for F in enumerate_fields(12)] == [1, -3, -4, 5, -7, 8, -8, -11, 12]
    assert enumerate_fields(2.9) == [QQ]


@settings(max_examples=40, deadline=None)
@given(elements())
def test_string_roundtrip(x):
    assert parse_element(str(x)) == x
    assert QuadElement.from_json(x.to_json()) == x


def test_fraction_interop():
    x = canonicalize(1, 1, 2, 5)
    assert x + Fraction(1, 2) == canonicalize(2, 1, 2, 5)
    assert 2 * x == canonicalize(1, 1, 1, 5)


@pytest.mark.parametrize("text", ["sqrt(-1)", "1-sqrt(-1)", "3/2+5*sqrt(2)", "-sqrt(12)", "(3-2*sqrt(5))/4", "2*sqrt(8)"])
def test_loose_element_syntax(text):
    x = parse_element(text)
    want = complex(sympy.N(sympy.sympify(text), 30))
    got = complex(sympy.N(sympy.sympify(str(x)), 30))
    assert abs(got - want) < 1e-25
    assert parse_element(str(x)) == x
