"""Weierstrass models over Q and their points over quadratic fields."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .qfield import (
    QQ,
    ZERO,
    FieldMismatchError,
    QuadElement,
    QuadField,
    _factor,
    rational,
    sqrt_in_field,
)


class SingularCurveError(ValueError):
    pass


class CurveMismatchError(ValueError):
    pass


# A torsion point over a quadratic field has order in 1..16 or 18.
TORSION_ORDERS = tuple(range(1, 17)) + (18,)


def _val(n: int, p: int) -> float:
    if n == 0:
        return math.inf
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True, eq=False)
class CurveModel:
    a1: Fraction
    a2: Fraction
    a3: Fraction
    a4: Fraction
    a6: Fraction
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a6"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.discriminant == 0:
            raise SingularCurveError(f"{self.ainvs_str()} is singular")

    @classmethod
    def from_ainvs(cls, ainvs, label=None) -> CurveModel:
        if len(ainvs) != 5:
            raise ValueError("expected five Weierstrass coefficients")
        return cls(*[Fraction(a) for a in ainvs], label=label)

    @property
    def ainvs(self) -> tuple[Fraction, ...]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    def __eq__(self, other):
        return isinstance(other, CurveModel) and self.ainvs == other.ainvs

    def __hash__(self):
        return hash(self.ainvs)

    def ainvs_str(self) -> str:
        return "[" + ",".join(str(a) for a in self.ainvs) + "]"

    def __str__(self):
        return (self.label + ":" if self.label else "") + self.ainvs_str()

    def __repr__(self):
        return f"CurveModel({self})"

    def to_json(self):
        return [str(a) for a in self.ainvs]

    # invariants -------------------------------------------------------------

    @cached_property
    def b_invariants(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        a1, a2, a3, a4, a6 = self.ainvs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def b2(self):
        return self.b_invariants[0]

    @property
    def b4(self):
        return self.b_invariants[1]

    @property
    def b6(self):
        return self.b_invariants[2]

    @property
    def b8(self):
        return self.b_invariants[3]

    @cached_property
    def c4(self) -> Fraction:
        return self.b2**2 - 24 * self.b4

    @cached_property
    def c6(self) -> Fraction:
        b2, b4, b6, _ = self.b_invariants
        return -(b2**3) + 36 * b2 * b4 - 216 * b6

    @cached_property
    def discriminant(self) -> Fraction:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @cached_property
    def j_invariant(self) -> Fraction:
        return self.c4**3 / self.discriminant

    @property
    def is_integral(self) -> bool:
        return all(a.denominator == 1 for a in self.ainvs)

    @cached_property
    def bad_primes(self) -> tuple[int, ...]:
        """Primes dividing numerator or denominator of the discriminant."""
        D = self.discriminant
        ps = {p for p, _ in _factor(abs(D.numerator))} | {p for p, _ in _factor(D.denominator)}
        return tuple(sorted(ps))

    @cached_property
    def _coeff_elements(self):
        return tuple(rational(a) for a in self.ainvs)

    # points -----------------------------------------------------------------

    def point(self, x, y) -> CurvePoint:
        x = x if isinstance(x, QuadElement) else rational(x)
        y = y if isinstance(y, QuadElement) else rational(y)
        P = CurvePoint(self, x, y)
        if not self.contains(x, y):
            raise ValueError(f"({x}, {y}) is not on {self}")
        return P

    def infinity(self) -> CurvePoint:
        return CurvePoint(self, None, None)

    def contains(self, x: QuadElement, y: QuadElement) -> bool:
        a1, a2, a3, a4, a6 = self._coeff_elements
        lhs = y * y + a1 * x * y + a3 * y
        rhs = x * x * x + a2 * x * x + a4 * x + a6
        return lhs == rhs

    def two_y_discriminant(self, x: QuadElement) -> QuadElement:
        """(a1 x + a3)^2 + 4 f(x) = 4x^3 + b2 x^2 + 2 b4 x + b6."""
        b2, b4, b6, _ = (rational(b) for b in self.b_invariants)
        return ((4 * x + b2) * x + 2 * b4) * x + b6

    def lift_x(self, x: QuadElement, field: QuadField | None = None) -> list[CurvePoint]:
        """Points with this x-coordinate and y in the field of x (or in ``field``)."""
        if field is None:
            field = x.field
        a1, a2, a3, a4, a6 = self._coeff_elements
        disc = self.two_y_discriminant(x)
        r = sqrt_in_field(disc, field)
        if r is None:
            return []
        h = a1 * x + a3
        ys = [(r - h) / 2]
        if r:
            ys.append((-r - h) / 2)
        return [CurvePoint(self, x, y) for y in ys]

    # coordinate changes -----------------------------------------------------

    def transform(self, u, r, s, t) -> CurveModel:
        """Model in coordinates x = u^2 x' + r, y = u^3 y' + u^2 s x' + t."""
        u, r, s, t = (Fraction(v) for v in (u, r, s, t))
        a1, a2, a3, a4, a6 = self.ainvs
        n1 = a1 + 2 * s
        n2 = a2 - s * a1 + 3 * r - s * s
        n3 = a3 + r * a1 + 2 * t
        n4 = a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t
        n6 = a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1
        return CurveModel(n1 / u, n2 / u**2, n3 / u**3, n4 / u**4, n6 / u**6, label=self.label)

    @cached_property
    def minimal(self) -> tuple[CurveModel, tuple[Fraction, Fraction, Fraction, Fraction]]:
        return minimal_model(self)

    def short_x(self, x: QuadElement) -> QuadElement:
        """x-coordinate on y^2 = x^3 - 27 c4 x - 54 c6."""
        return 36 * x + rational(3 * self.b2)


def compute_invariants(a1, a2, a3, a4, a6) -> CurveModel:
    return CurveModel.from_ainvs([a1, a2, a3, a4, a6])


def parse_ainvs(text: str) -> list[Fraction]:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError(f"expected '[a1,a2,a3,a4,a6]', got {text!r}")
    try:
        parts = json.loads(text) if '"' in text else text[1:-1].split(",")
        vals = [Fraction(str(p).strip()) for p in parts]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed coefficient list {text!r}") from exc
    if len(vals) != 5:
        raise ValueError(f"expected 5 coefficients, got {len(vals)}")
    return vals


# minimal models -----------------------------------------------------------------


def _model_from_c4c6(c4: int, c6: int) -> CurveModel | None:
    """The reduced integral model with invariants (c4, c6), or None if there is none."""
    b2 = -c6 % 12
    if b2 > 6:
        b2 -= 12
    num4 = b2 * b2 - c4
    if num4 % 24:
        return None
    b4 = num4 // 24
    num6 = -(b2**3) + 36 * b2 * b4 - c6
    if num6 % 216:
        return None
    b6 = num6 // 216
    a1 = b2 % 2
    a3 = b6 % 2
    if (b2 - a1) % 4 or (b4 - a1 * a3) % 2 or (b6 - a3) % 4:
        return None
    a2 = (b2 - a1) // 4
    a4 = (b4 - a1 * a3) // 2
    a6 = (b6 - a3) // 4
    try:
        E = CurveModel.from_ainvs([a1, a2, a3, a4, a6])
    except SingularCurveError:
        return None
    if E.c4 != c4 or E.c6 != c6:
        return None
    return E


def _transform_between(E: CurveModel, F: CurveModel, u: Fraction):
    a1, a2, a3, _, _ = E.ainvs
    s = (u * F.a1 - a1) / 2
    r = (u * u * F.a2 - a2 + s * a1 + s * s) / 3
    t = (u**3 * F.a3 - a3 - r * a1) / 2
    return r, s, t


def minimal_model(E: CurveModel):
    """Global minimal reduced model of E over Q and the (u, r, s, t) reaching it."""
    a = E.ainvs
    # scale to an integral model: a_i -> a_i * m^i
    m = 1
    for p in sorted({p for ai in a for p, _ in _factor(ai.denominator)}):
        k = max(math.ceil(_val(ai.denominator, p) / i) for ai, i in zip(a, (1, 2, 3, 4, 6)))
        m *= p**k
    c4 = E.c4 * m**4
    c6 = E.c6 * m**6
    D = E.discriminant * m**12
    assert c4.denominator == c6.denominator == D.denominator == 1
    c4, c6, D = int(c4), int(c6), int(D)
    base = 1
    ranges = {}
    for p, e in _factor(abs(D)):
        kmax = min(e // 12, *(int(_val(c, p)) // w for c, w in ((c4, 4), (c6, 6)) if c))
        if p >= 5:
            base *= p ** int(kmax)
        elif kmax > 0:
            ranges[p] = int(kmax)
    k2s = range(ranges.get(2, 0), -1, -1)
    k3s = range(ranges.get(3, 0), -1, -1)
    best = None
    for k2 in k2s:
        for k3 in k3s:
            u = base * 2**k2 * 3**k3
            F = _model_from_c4c6(c4 // u**4, c6 // u**6)
            if F is not None:
                best = (F, u)
                break
        if best:
            break
    if best is None:
        raise ArithmeticError(f"no integral model found for {E}")
    F, umin = best
    u = Fraction(umin, m)
    r, s, t = _transform_between(E, F, u)
    F = E.transform(u, r, s, t)
    assert F.ainvs == best[0].ainvs
    return F, (u, r, s, t)


def is_minimal(E: CurveModel) -> bool:
    return E.is_integral and abs(E.minimal[0].discriminant) == abs(E.discriminant)


# points -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CurvePoint:
    curve: CurveModel
    x: QuadElement | None
    y: QuadElement | None

    def __post_init__(self):
        if self.x is not None and (self.x.d != 1 and self.y.d != 1 and self.x.d != self.y.d):
            raise FieldMismatchError("coordinates lie in different quadratic fields")

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    @property
    def min_field(self) -> QuadField:
        if self.x is None:
            return QQ
        return QuadField(self.x.d if self.x.d != 1 else self.y.d)

    @property
    def degree(self) -> int:
        return self.min_field.degree

    def __eq__(self, other):
        if not isinstance(other, CurvePoint):
            return NotImplemented
        return self.curve == other.curve and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((self.curve, self.x, self.y))

    def __str__(self):
        if self.x is None:
            return "(0 : 1 : 0)"
        return f"({self.x}, {self.y})"

    def __repr__(self):
        return f"CurvePoint{self}"

    def __neg__(self) -> CurvePoint:
        if self.x is None:
            return self
        a1, _, a3, _, _ = self.curve._coeff_elements
        return CurvePoint(self.curve, self.x, -self.y - a1 * self.x - a3)

    def __add__(self, other: CurvePoint) -> CurvePoint:
        if not isinstance(other, CurvePoint):
            return NotImplemented
        if self.curve != other.curve:
            raise CurveMismatchError("points lie on different curves")
        if self.x is None:
            return other
        if other.x is None:
            return self
        a1, a2, a3, a4, a6 = self.curve._coeff_elements
        x1, y1, x2, y2 = self.x, self.y, other.x, other.y
        if x1 == x2:
            if y1 + y2 + a1 * x2 + a3 == ZERO:
                return self.curve.infinity()
            den = 2 * y1 + a1 * x1 + a3
            lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) / den
            nu = (-(x1 * x1 * x1) + a4 * x1 + 2 * a6 - a3 * y1) / den
        else:
            den = x2 - x1
            lam = (y2 - y1) / den
            nu = (y1 * x2 - y2 * x1) / den
        x3 = lam * lam + a1 * lam - a2 - x1 - x2
        y3 = -(lam + a1) * x3 - nu - a3
        return CurvePoint(self.curve, x3, y3)

    def __sub__(self, other):
        return self + (-other)

    def double(self) -> CurvePoint:
        return self + self

    def __mul__(self, n: int) -> CurvePoint:
        if n < 0:
            return (-self) * (-n)
        result = self.curve.infinity()
        base = self
        while n:
            if n & 1:
                result = result + base
            n >>= 1
            if n:
                base = base + base
        return result

    __rmul__ = __mul__

    def conjugate(self) -> CurvePoint:
        if self.x is None:
            return self
        return CurvePoint(self.curve, self.x.conjugate(), self.y.conjugate())

    def on_curve(self) -> bool:
        return self.x is None or self.curve.contains(self.x, self.y)

    def change_model(self, u, r, s, t) -> CurvePoint:
        """Image on ``curve.transform(u, r, s, t)``."""
        F = self.curve.transform(u, r, s, t)
        if self.x is None:
            return F.infinity()
        u, r, s, t = (rational(v) for v in (u, r, s, t))
        xp = (self.x - r) / (u * u)
        yp = (self.y - s * (self.x - r) - t) / (u * u * u)
        return CurvePoint(F, xp, yp)

    def sort_key(self):
        if self.x is None:
            return ((0,),)
        return (self.min_field.sort_key(), self.x.sort_key(), self.y.sort_key())

    def to_json(self):
        if self.x is None:
            return None
        return {"x": str(self.x), "y": str(self.y)}


def torsion_test(P: CurvePoint) -> bool:
    """True iff P has finite order (checked exactly against the possible orders over quadratic fields)."""
    if P.is_infinity:
        return True
    Q = P
    for k in range(2, 19):
        Q = Q + P
        if Q.is_infinity:
            return k in TORSION_ORDERS
    return False


def group_law(P: CurvePoint, Q: CurvePoint) -> CurvePoint:
    return P + Q
