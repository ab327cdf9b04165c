"""Exact arithmetic in Q and quadratic fields Q(sqrt(d)).

Elements are stored as integer triples ``(a + b*sqrt(d)) / c`` in lowest terms
with ``c > 0``.  Rationals use ``d = 1`` and ``b = 0`` so that degree-one and
degree-two code paths share a single type.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from flint import arb, ctx

DEFAULT_PRECISION = 128


class InvalidFieldError(ValueError):
    pass


class FieldMismatchError(ValueError):
    pass


def squarefree_decompose(n: int) -> tuple[int, int]:
    """Return ``(s, f)`` with ``n = s * f**2`` and ``s`` squarefree (sign kept in ``s``)."""
    if n == 0:
        raise ValueError("zero has no squarefree part")
    sign = -1 if n < 0 else 1
    n = abs(n)
    s, f = 1, 1
    for p, e in _factor(n):
        f *= p ** (e // 2)
        if e % 2:
            s *= p
    return sign * s, f


def _factor(n: int) -> list[tuple[int, int]]:
    from flint import fmpz

    if n == 1:
        return []
    return [(int(p), int(e)) for p, e in fmpz(n).factor()]


def is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    return all(e == 1 for _, e in _factor(abs(n)))


def field_discriminant(d: int) -> int:
    if d == 1:
        return 1
    return d if d % 4 == 1 else 4 * d


@dataclass(frozen=True, order=True)
class QuadField:
    """Q(sqrt(d)) for squarefree ``d``; ``d == 1`` is the marker for Q itself."""

    d: int
    disc: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.d == 0 or (self.d != 1 and not is_squarefree(self.d)):
            raise InvalidFieldError(f"d={self.d} is not a squarefree integer != 0, 1")
        object.__setattr__(self, "disc", field_discriminant(self.d))

    @property
    def is_rational(self) -> bool:
        return self.d == 1

    @property
    def degree(self) -> int:
        return 1 if self.d == 1 else 2

    @property
    def is_real(self) -> bool:
        return self.d > 0

    def sort_key(self):
        return (abs(self.disc), self.disc < 0)

    def __str__(self):
        return "Q" if self.d == 1 else f"Q(sqrt({self.d}))"

    def gen(self) -> QuadElement:
        return QuadElement.canonical(0, 1, 1, self.d)

    def __call__(self, a, b=0) -> QuadElement:
        """Element ``a + b*sqrt(d)`` with rational ``a``, ``b``."""
        a, b = Fraction(a), Fraction(b)
        c = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
        return QuadElement.canonical(int(a * c), int(b * c), c, self.d)


QQ = QuadField(1)


@dataclass(frozen=True)
class QuadElement:
    """The number ``(a + b*sqrt(d)) / c``; always in canonical form."""

    a: int
    b: int
    c: int
    d: int

    @staticmethod
    def canonical(a: int, b: int, c: int, d: int) -> QuadElement:
        if c == 0:
            raise ZeroDivisionError("denominator is zero")
        if b == 0:
            d = 1
        if c < 0:
            a, b, c = -a, -b, -c
        g = math.gcd(math.gcd(a, b), c)
        if g > 1:
            a, b, c = a // g, b // g, c // g
        return QuadElement(a, b, c, d)

    @property
    def field(self) -> QuadField:
        return QuadField(self.d)

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def to_fraction(self) -> Fraction:
        if self.b:
            raise ValueError(f"{self} is not rational")
        return Fraction(self.a, self.c)

    def parts(self) -> tuple[Fraction, Fraction]:
        """Rational ``(u, v)`` with ``self = u + v*sqrt(d)``."""
        return Fraction(self.a, self.c), Fraction(self.b, self.c)

    # arithmetic -------------------------------------------------------------

    def _coerce(self, other) -> QuadElement:
        if isinstance(other, QuadElement):
            return other
        if isinstance(other, (int, Fraction)):
            o = Fraction(other)
            return QuadElement(o.numerator, 0, o.denominator, 1)
        return NotImplemented

    def _common_d(self, other: QuadElement) -> int:
        if self.d == 1:
            return other.d
        if other.d == 1 or other.d == self.d:
            return self.d
        raise FieldMismatchError(f"cannot combine elements of Q(sqrt({self.d})) and Q(sqrt({other.d}))")

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d = self._common_d(other)
        return QuadElement.canonical(
            self.a * other.c + other.a * self.c,
            self.b * other.c + other.b * self.c,
            self.c * other.c,
            d,
        )

    __radd__ = __add__

    def __neg__(self):
        return QuadElement(-self.a, -self.b, self.c, self.d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d = self._common_d(other)
        return QuadElement.canonical(
            self.a * other.a + d * self.b * other.b,
            self.a * other.b + self.b * other.a,
            self.c * other.c,
            d,
        )

    __rmul__ = __mul__

    def inverse(self) -> QuadElement:
        n = self.a * self.a - self.d * self.b * self.b
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return QuadElement.canonical(self.a * self.c, -self.b * self.c, n, self.d)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, QuadElement):
            return (self.a, self.b, self.c, self.d) == (other.a, other.b, other.c, other.d)
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and Fraction(self.a, self.c) == other
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.c, self.d))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def conjugate(self) -> QuadElement:
        return QuadElement(self.a, -self.b, self.c, self.d)

    def norm(self) -> Fraction:
        return Fraction(self.a * self.a - self.d * self.b * self.b, self.c * self.c)

    def trace(self) -> Fraction:
        return Fraction(2 * self.a, self.c)

    def minpoly(self) -> tuple[int, ...]:
        """Primitive integer minimal polynomial, highest degree first, positive leading coefficient."""
        if self.b == 0:
            return (self.c, -self.a)
        A = self.c * self.c
        B = -2 * self.a * self.c
        C = self.a * self.a - self.b * self.b * self.d
        g = math.gcd(math.gcd(A, B), C)
        return (A // g, B // g, C // g)

    def sort_key(self):
        return (abs(field_discriminant(self.d)), self.d < 0, self.c, abs(self.a), self.a < 0, abs(self.b), self.b < 0)

    # numerics ---------------------------------------------------------------

    def embed(self, sign: int = 1, prec: int = DEFAULT_PRECISION):
        """Value under the embedding sqrt(d) -> sign*sqrt(d), as an arb (real) or acb ball."""
        from flint import acb

        with _precision(prec):
            if self.d > 0:
                return (arb(self.a) + sign * self.b * arb(self.d).sqrt()) / self.c
            return acb(arb(self.a) / self.c, sign * self.b * arb(-self.d).sqrt() / self.c)

    def __float__(self):
        if self.d < 0:
            raise TypeError("element of an imaginary quadratic field has no real value")
        return float(self.embed())

    # serialisation ----------------------------------------------------------

    def __str__(self):
        if self.b == 0:
            return str(self.a) if self.c == 1 else f"{self.a}/{self.c}"
        return f"({self.a}{self.b:+d}*sqrt({self.d}))/{self.c}"

    def __repr__(self):
        return f"QuadElement({self})"

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}

    @staticmethod
    def from_json(obj) -> QuadElement:
        if isinstance(obj, str):
            return parse_element(obj)
        return canonicalize(int(obj["a"]), int(obj["b"]), int(obj["c"]), int(obj["d"]))


ZERO = QuadElement(0, 0, 1, 1)
ONE = QuadElement(1, 0, 1, 1)


def rational(x) -> QuadElement:
    x = Fraction(x)
    return QuadElement(x.numerator, 0, x.denominator, 1)


def canonicalize(a: int, b: int, c: int, d: int) -> QuadElement:
    """Reduce ``(a + b*sqrt(d)) / c`` to canonical form, pulling square factors out of ``d``."""
    if c == 0:
        raise ZeroDivisionError("denominator is zero")
    if d == 0:
        raise InvalidFieldError("d must be nonzero")
    if b == 0:
        return QuadElement.canonical(a, 0, c, 1)
    s, f = squarefree_decompose(d)
    if s == 1:
        return QuadElement.canonical(a + b * f, 0, c, 1)
    return QuadElement.canonical(a, b * f, c, s)


_ELEMENT_RE = re.compile(
    r"^\(\s*(?P<a>[+-]?\d+)\s*(?P<b>[+-]\s*\d+)\s*\*\s*sqrt\(\s*(?P<d>[+-]?\d+)\s*\)\s*\)\s*/\s*(?P<c>\d+)$"
)


def parse_element(text: str) -> QuadElement:
    text = text.strip()
    m = _ELEMENT_RE.match(text)
    if m:
        return canonicalize(int(m["a"]), int(m["b"].replace(" ", "")), int(m["c"]), int(m["d"]))
    if text.startswith("{"):
        return QuadElement.from_json(json.loads(text))
    try:
        if "sqrt" in text:
            return _parse_loose(text)
        return rational(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse field element {text!r}") from exc


_LOOSE_RE = re.compile(r"^(?P<a>[+-]?\d+(?:/\d+)?)?(?P<b>[+-]?(?:\d+(?:/\d+)?\*?)?)sqrt\((?P<d>[+-]?\d+)\)$")


def _parse_loose(text: str) -> QuadElement:
    """Forms like ``sqrt(-1)``, ``1-sqrt(-1)``, ``3/2+5*sqrt(2)``, optionally ``(...)/c``."""
    t = re.sub(r"\s+", "", text)
    den = 1
    m = re.fullmatch(r"\((.*)\)/(\d+)", t)
    if m:
        t, den = m[1], int(m[2])
    m = _LOOSE_RE.fullmatch(t)
    if not m:
        raise ValueError(text)
    a = Fraction(m["a"] or 0)
    bs = (m["b"] or "").rstrip("*")
    b = Fraction(1 if bs in ("", "+") else -1 if bs == "-" else Fraction(bs))
    d = int(m["d"])
    a, b = a / den, b / den
    c = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
    return canonicalize(int(a * 2 * c), int(b * 2 * c), 2 * c, d)


def _isqrt_exact(n: int) -> int | None:
    if n < 0:
        return None
    r = math.isqrt(n)
    return r if r * r == n else None


def rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    p, r = _isqrt_exact(q.numerator), _isqrt_exact(q.denominator)
    if p is None or r is None:
        return None
    return Fraction(p, r)


def _pick_root(y: QuadElement) -> QuadElement:
    neg = -y
    key = lambda z: ((z.b > 0) - (z.b < 0), (z.a > 0) - (z.a < 0))
    return y if key(y) >= key(neg) else neg


def sqrt_in_field(x: QuadElement, field: QuadField | None = None) -> QuadElement | None:
    """A square root of ``x`` lying in ``field`` (default: the field of ``x``), or None."""
    if field is None:
        field = x.field
    if not x.is_rational and field.d != x.d:
        raise FieldMismatchError(f"{x} does not lie in {field}")
    d = field.d
    if x.is_rational:
        q = x.to_fraction()
        r = rational_sqrt(q)
        if r is not None:
            return _pick_root(rational(r))
        if d != 1:
            s = rational_sqrt(q / d)
            if s is not None:
                return _pick_root(QuadElement.canonical(0, s.numerator, s.denominator, d))
        return None
    u0, v0 = x.parts()
    n = rational_sqrt(x.norm())
    if n is None:
        return None
    for sgn in (1, -1):
        u = rational_sqrt((u0 + sgn * n) / 2)
        if not u:
            continue
        v = v0 / (2 * u)
        if u * u + d * v * v == u0:
            y = field(u, v)
            return _pick_root(y)
    return None


# heights ------------------------------------------------------------------------


class _precision:
    def __init__(self, prec: int):
        self.prec = prec

    def __enter__(self):
        self.saved = ctx.prec
        ctx.prec = max(self.prec, 53)

    def __exit__(self, *exc):
        ctx.prec = self.saved


def mahler_measure(coeffs: tuple[int, ...], prec: int = DEFAULT_PRECISION) -> arb:
    """Mahler measure of an integer polynomial of degree <= 2, as a rigorous ball."""
    with _precision(prec + 20):
        if len(coeffs) == 2:
            A, B = coeffs
            return arb(max(abs(A), abs(B)))
        A, B, C = coeffs
        A, B, C = (A, B, C) if A > 0 else (-A, -B, -C)
        D = B * B - 4 * A * C
        if D < 0:
            return arb(max(A, C))
        if C == 0:
            return arb(max(A, abs(B)))
        sd = arb(D).sqrt()
        r1 = abs(-arb(B) + sd) / (2 * A)
        r2 = abs(-arb(B) - sd) / (2 * A)
        one = arb(1)
        return A * r1.max(one) * r2.max(one)


def weil_height(x: QuadElement, prec: int = DEFAULT_PRECISION) -> arb:
    """Absolute logarithmic Weil height, as an arb ball of radius ~2^-prec."""
    coeffs = x.minpoly()
    deg = len(coeffs) - 1
    with _precision(prec + 20):
        return mahler_measure(coeffs, prec).log() / deg


def weil_height_float(x: QuadElement) -> float:
    return float(weil_height(x, 64).mid())


# fields -------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _squarefree_sieve(n: int):
    import numpy as np

    sf = np.ones(n + 1, dtype=bool)
    sf[0] = False
    p = 2
    while p * p <= n:
        sf[p * p :: p * p] = False
        p += 1
    return sf


def enumerate_fields(disc_cap: float) -> list[QuadField]:
    """Q together with every quadratic field of absolute discriminant <= disc_cap."""
    if disc_cap < 1:
        raise ValueError("disc_cap must be >= 1")
    cap = int(math.floor(disc_cap))
    sf = _squarefree_sieve(max(cap, 4))
    out = [QQ]
    for m in range(1, cap + 1):
        if not sf[m]:
            continue
        for d in (m, -m):
            if d == 1:
                continue
            if abs(field_discriminant(d)) <= cap:
                out.append(QuadField(d))
    out.sort(key=QuadField.sort_key)
    return out


@dataclass(frozen=True)
class FamilySpec:
    """Fields of degree <= max_degree over Q, optionally capped by |disc|."""

    max_degree: int = 2
    disc_cap: float | None = None
    base: str = "Q"

    def __post_init__(self):
        if self.base != "Q" or self.max_degree not in (1, 2):
            raise NotImplementedError("only base Q and degree <= 2 are supported")

    def fields(self) -> list[QuadField]:
        if self.max_degree == 1:
            return [QQ]
        if self.disc_cap is None:
            raise ValueError("an unbounded family cannot be listed")
        return enumerate_fields(self.disc_cap)

    def contains(self, F: QuadField) -> bool:
        if F.degree > self.max_degree:
            return False
        return self.disc_cap is None or abs(F.disc) <= self.disc_cap
