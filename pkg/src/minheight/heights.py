"""Canonical heights, normalised as lim 4^-n h(x(2^n P)).

The canonical height splits into the Weil height of x(P) plus one correction
per place.  Each correction is the series sum_n 4^-(n+1) d_n, where d_n is
the growth defect of the doubling map (X:Z) -> (phi(X,Z) : psi(X,Z)) along
the orbit of P.  The defect vanishes at finite places outside the resultant
of phi and psi.  Archimedean sums are evaluated in ball arithmetic.
Non-archimedean sums are exact rationals times log p, apart from a tail
bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from flint import acb, arb

from .curve import CurveModel, CurvePoint, torsion_test
from .qfield import DEFAULT_PRECISION, QuadElement, QuadField, _factor, _precision, weil_height

# full normalisation (lim 4^-n h(x(2^n P))) and the convention that halves x-heights
NORMALIZATION_FACTOR = 2
PAPER = "paper"
HALVED = "halved-x"
MAX_PRECISION = 1024


class PrecisionError(ArithmeticError):
    pass


class OracleUnavailableError(ArithmeticError):
    pass


def _homog_eval(coeffs, X, Z):
    """sum_i coeffs[i] X^(deg-i) Z^i."""
    deg = len(coeffs) - 1
    xp = [1, X]
    zp = [1, Z]
    for _ in range(2, deg + 1):
        xp.append(xp[-1] * X)
        zp.append(zp[-1] * Z)
    acc = 0
    for i, c in enumerate(coeffs):
        if c:
            acc = acc + c * xp[deg - i] * zp[i]
    return acc


def _resultant_certificates(phi, psi):
    """Resultant R and cofactors with f1*phi + g1*psi = R*Z^7, f2*phi + g2*psi = R*X^7."""
    import sympy

    X, Z = sympy.symbols("X Z")
    P = sum(c * X ** (4 - i) * Z**i for i, c in enumerate(phi))
    Q = sum(c * X ** (4 - i) * Z**i for i, c in enumerate(psi))
    R = sympy.resultant(P.subs(Z, 1), Q.subs(Z, 1), X)
    unknowns = sympy.symbols("u0:8")
    f = sum(unknowns[i] * X ** (3 - i) * Z**i for i in range(4))
    g = sum(unknowns[4 + i] * X ** (3 - i) * Z**i for i in range(4))
    out = []
    for target in (R * Z**7, R * X**7):
        expr = sympy.Poly(sympy.expand(f * P + g * Q - target), X, Z)
        sol = sympy.solve(expr.coeffs(), unknowns, dict=True)[0]
        vals = [Fraction(str(sympy.nsimplify(sol.get(u, 0)))) for u in unknowns]
        out.append(vals)
    return Fraction(str(R)), out


@dataclass
class HeightData:
    """Per-curve constants for the doubling iteration (computed on the minimal model)."""

    curve: CurveModel
    minimal: CurveModel
    transform: tuple
    phi: tuple[int, ...]
    psi: tuple[int, ...]
    resultant: int
    primes: tuple[int, ...]
    defect_upper: float  # sup of d_n at an archimedean place
    defect_lower: float  # -inf of d_n at an archimedean place (resultant bound)

    @property
    def arch_defect_bound(self) -> float:
        return max(self.defect_upper, self.defect_lower)


@lru_cache(maxsize=256)
def height_data(E: CurveModel) -> HeightData:
    M, tr = E.minimal
    b2, b4, b6, b8 = (int(b) for b in M.b_invariants)
    phi = (1, 0, -b4, -2 * b6, -b8)
    psi = (0, 4, b2, 2 * b4, b6)
    R, cofactors = _resultant_certificates(phi, psi)
    assert R.denominator == 1 and R != 0
    R = int(R)
    primes = tuple(p for p, _ in _factor(abs(R)))
    upper = math.log(max(sum(abs(c) for c in phi), sum(abs(c) for c in psi)))
    s = max(float(sum(abs(c) for c in cf)) for cf in cofactors)
    lower = max(0.0, math.log(s) - math.log(abs(R)))
    return HeightData(E, M, tr, phi, psi, R, primes, upper * (1 + 1e-12), lower * (1 + 1e-12) + 1e-12)


def _farb(q: Fraction) -> arb:
    return arb(q.numerator) / q.denominator


def tail_bound(defect_bound: float, terms: int) -> float:
    """|sum_{n >= terms} 4^-(n+1) d_n| for |d_n| <= defect_bound."""
    return defect_bound * 4.0 ** (-terms) / 3.0


def terms_for(defect_bound: float, prec: int) -> int:
    n = 1
    while tail_bound(defect_bound, n) > 2.0 ** (-prec - 2):
        n += 1
    return n


# places --------------------------------------------------------------------------


@dataclass(frozen=True)
class ArchPlace:
    """Embedding of Q(sqrt(d)) into R (sign = +-1) or C; weight = n_v / [F:Q]."""

    d: int
    sign: int
    weight: Fraction

    @property
    def is_complex(self) -> bool:
        return self.d < 0


def arch_places(F: QuadField) -> list[ArchPlace]:
    if F.is_rational:
        return [ArchPlace(1, 1, Fraction(1))]
    if F.d > 0:
        return [ArchPlace(F.d, 1, Fraction(1, 2)), ArchPlace(F.d, -1, Fraction(1, 2))]
    return [ArchPlace(F.d, 1, Fraction(1))]


def _embed(x: QuadElement, place: ArchPlace):
    if x.is_rational:
        v = arb(x.a) / x.c
        return acb(v) if place.is_complex else v
    if place.is_complex:
        return acb(arb(x.a) / x.c, place.sign * x.b * arb(-x.d).sqrt() / x.c)
    return (arb(x.a) + place.sign * x.b * arb(x.d).sqrt()) / x.c


def _arch_defect_sum(data: HeightData, x: QuadElement, place: ArchPlace, terms: int) -> arb:
    X = _embed(x, place)
    Z = acb(1) if place.is_complex else arb(1)
    total = arb(0)
    scale = arb(1)
    for _ in range(terms):
        scale = scale / 4
        F = _homog_eval(data.phi, X, Z)
        G = _homog_eval(data.psi, X, Z)
        aF, aG = abs(F), abs(G)
        big = aF.max(aG)
        if not big > 0:
            raise PrecisionError("doubling iterate lost all precision")
        d = big.log() - 4 * abs(X).max(abs(Z)).log()
        total += scale * d
        s = arb(big.mid())
        X, Z = F / s, G / s
    return total


def archimedean_correction(P: CurvePoint, place: ArchPlace, precision: int = DEFAULT_PRECISION) -> arb:
    """sum_n 4^-(n+1) d_n at one archimedean place, as a ball including the tail."""
    data = height_data(P.curve)
    Pm = _to_minimal(P, data)
    terms = terms_for(data.arch_defect_bound, precision)
    work = precision + 2 * terms + 40
    while True:
        with _precision(work):
            try:
                s = _arch_defect_sum(data, Pm.x, place, terms)
            except PrecisionError:
                # the doubling map expands balls by a curve-dependent rate
                if work > 8 * MAX_PRECISION:
                    raise
                work *= 2
                continue
            t = tail_bound(data.arch_defect_bound, terms)
            s = s + arb(0, t)
        if s.rad() < 2.0 ** (-precision) or work > 8 * MAX_PRECISION:
            return s
        work *= 2


def archimedean_local_height(P: CurvePoint, embedding: int = 0, precision: int = DEFAULT_PRECISION) -> arb:
    """log max(|x|_v, 1) + correction at the embedding-th archimedean place of K(P)."""
    if P.is_infinity:
        raise ValueError("local height is undefined at the identity")
    place = arch_places(P.min_field)[embedding]
    Pm = _to_minimal(P, height_data(P.curve))
    with _precision(precision + 40):
        naive = abs(_embed(Pm.x, place)).max(arb(1)).log()
    return naive + archimedean_correction(P, place, precision)


# p-adic places ---------------------------------------------------------------------


def _ord(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("ord of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def padic_sqrt(d: int, p: int, k: int) -> int:
    """r with r^2 = d mod p^k (d a nonzero square unit in Z_p)."""
    if p == 2:
        if d % 8 != 1:
            raise ValueError("not a 2-adic square")
        r = 1
        for i in range(3, k):
            if (r * r - d) % (1 << (i + 1)):
                r += 1 << (i - 1)
        return r % (1 << k)
    from sympy.ntheory import sqrt_mod

    r = sqrt_mod(d % p, p)
    if r is None:
        raise ValueError("not a p-adic square")
    pk = p
    while pk < p**k:
        pk = min(pk * pk, p**k)
        r = (r - (r * r - d) * pow(2 * r, -1, pk)) % pk
    return r


@dataclass(frozen=True)
class LocalRing:
    """Z_p[w]/p^k with w^2 = t*w + n; the case t = n = 0 is Z_p itself."""

    p: int
    t: int
    n: int

    def mul(self, x, y, mod):
        a0, a1 = x
        b0, b1 = y
        c = a1 * b1
        return ((a0 * b0 + self.n * c) % mod, (a0 * b1 + a1 * b0 + self.t * c) % mod)

    def add(self, x, y, mod):
        return ((x[0] + y[0]) % mod, (x[1] + y[1]) % mod)

    def scal(self, c, x, mod):
        return ((c * x[0]) % mod, (c * x[1]) % mod)

    def val(self, x, mod) -> Fraction | None:
        """Valuation normalised by v(p) = 1, or None if x = 0 at this precision."""
        if self.t == 0 and self.n == 0:
            return None if x[0] % mod == 0 else Fraction(_ord(x[0] % mod, self.p))
        a0, a1 = x
        N = (a0 * a0 + self.t * a0 * a1 - self.n * a1 * a1) % mod
        if N == 0:
            return None
        return Fraction(_ord(N, self.p), 2)


@dataclass(frozen=True)
class FinitePlace:
    p: int
    kind: str  # "rational", "split", "inert", "ramified"
    weight: Fraction
    root_sign: int = 1


def places_above(p: int, F: QuadField) -> list[FinitePlace]:
    if F.is_rational:
        return [FinitePlace(p, "rational", Fraction(1))]
    d = F.d
    if F.disc % p == 0:
        return [FinitePlace(p, "ramified", Fraction(1))]
    if p == 2:
        split = d % 8 == 1
    else:
        split = pow(d % p, (p - 1) // 2, p) == 1
    if split:
        return [FinitePlace(p, "split", Fraction(1, 2), 1), FinitePlace(p, "split", Fraction(1, 2), -1)]
    return [FinitePlace(p, "inert", Fraction(1))]


def _local_setup(x: QuadElement, place: FinitePlace, k: int):
    """Ring and starting pair (X, Z) mod p^k representing x at the place."""
    p = place.p
    mod = p**k
    if place.kind in ("rational", "split"):
        ring = LocalRing(p, 0, 0)
        if place.kind == "rational" or x.b == 0:
            X = x.a
        else:
            r = padic_sqrt(x.d, p, k)
            X = x.a + place.root_sign * x.b * r
        return ring, (X % mod, 0), (x.c % mod, 0)
    d = x.d
    if p == 2 and d % 4 == 1:
        ring = LocalRing(p, 1, (d - 1) // 4)
        X = ((x.a - x.b) % mod, (2 * x.b) % mod)
    else:
        ring = LocalRing(p, 0, d)
        X = (x.a % mod, x.b % mod)
    return ring, X, (x.c % mod, 0)


def _homog_local(ring: LocalRing, coeffs, X, Z, mod):
    deg = len(coeffs) - 1
    xp = [(1, 0), X]
    zp = [(1, 0), Z]
    for _ in range(2, deg + 1):
        xp.append(ring.mul(xp[-1], X, mod))
        zp.append(ring.mul(zp[-1], Z, mod))
    acc = (0, 0)
    for i, c in enumerate(coeffs):
        if c:
            acc = ring.add(acc, ring.scal(c, ring.mul(xp[deg - i], zp[i], mod), mod), mod)
    return acc


def _min_val(ring, X, Z, mod):
    vs = [v for v in (ring.val(X, mod), ring.val(Z, mod)) if v is not None]
    if not vs:
        raise PrecisionError("p-adic pair vanished at working precision")
    return min(vs)


def padic_defect_sum(data: HeightData, x: QuadElement, place: FinitePlace, terms: int) -> Fraction:
    """Exact sum_{n < terms} 4^-(n+1) e_n, where d_n = -e_n log p."""
    p = place.p
    vres = _ord(data.resultant, p)
    k = 2 * (terms + 3) * (vres + 5) + 20
    ring, X, Z = _local_setup(x, place, k)
    mod = p**k
    m = int(_min_val(ring, X, Z, mod))
    if m:
        X = (X[0] // p**m, X[1] // p**m)
        Z = (Z[0] // p**m, Z[1] // p**m)
        k -= m
        mod = p**k
    total = Fraction(0)
    scale = Fraction(1)
    for _ in range(terms):
        scale /= 4
        vin = _min_val(ring, X, Z, mod)
        F = _homog_local(ring, data.phi, X, Z, mod)
        G = _homog_local(ring, data.psi, X, Z, mod)
        vout = _min_val(ring, F, G, mod)
        if 2 * vout + 4 >= k:
            raise PrecisionError("p-adic precision exhausted")
        e = vout - 4 * vin
        if e < 0 or e > vres:
            raise ArithmeticError(f"defect {e} outside [0, {vres}] at p={p}")
        total += scale * e
        m = int(vout)
        pm = p**m
        X = (F[0] // pm, F[1] // pm)
        Z = (G[0] // pm, G[1] // pm)
        k -= m
        mod = p**k
        X = (X[0] % mod, X[1] % mod)
        Z = (Z[0] % mod, Z[1] % mod)
    return total


def _naive_finite(x: QuadElement, place: FinitePlace) -> Fraction:
    """max(0, -v(x)) in units of log p."""
    k = 64 + 4 * max(1, x.c.bit_length())
    ring, X, Z = _local_setup(x, place, k)
    mod = place.p**k
    vx, vz = ring.val(X, mod), ring.val(Z, mod)
    if vz is None:
        raise PrecisionError("denominator vanished")
    if vx is None:
        return Fraction(0)
    return max(Fraction(0), vz - vx)


def nonarchimedean_correction(P: CurvePoint, p: int, field: QuadField | None = None, precision: int = DEFAULT_PRECISION) -> arb:
    """Weighted sum over places v | p of the defect series, times log p, with tail."""
    data = height_data(P.curve)
    Pm = _to_minimal(P, data)
    F = field or P.min_field
    if p not in data.primes:
        return arb(0)
    vres = _ord(data.resultant, p)
    terms = terms_for(vres * math.log(p), precision)
    s = Fraction(0)
    for place in places_above(p, F):
        s += place.weight * padic_defect_sum(data, Pm.x, place, terms)
    with _precision(precision + 40):
        lp = arb(p).log()
        return -(arb(s.numerator) / s.denominator) * lp + arb(0, tail_bound(vres * math.log(p), terms))


def nonarchimedean_local_height(P: CurvePoint, p: int, field: QuadField | None = None, precision: int = DEFAULT_PRECISION) -> arb:
    """sum_{v | p} w_v (log max(|x|_v, 1) + correction_v), full normalisation."""
    if P.is_infinity:
        raise ValueError("local height is undefined at the identity")
    data = height_data(P.curve)
    Pm = _to_minimal(P, data)
    F = field or P.min_field
    naive = sum((pl.weight * _naive_finite(Pm.x, pl) for pl in places_above(p, F)), Fraction(0))
    with _precision(precision + 40):
        base = arb(naive.numerator) / naive.denominator * arb(p).log()
    return base + nonarchimedean_correction(P, p, F, precision)


def _to_minimal(P: CurvePoint, data: HeightData) -> CurvePoint:
    if data.minimal == P.curve:
        return P
    return P.change_model(*data.transform)


# canonical height -----------------------------------------------------------------


@dataclass(frozen=True)
class HeightValue:
    ball: arb = field(repr=False)
    normalization: str = PAPER
    exact_zero: bool = False

    @property
    def value(self) -> float:
        return 0.0 if self.exact_zero else float(self.ball.mid())

    @property
    def certified_error(self) -> float:
        return 0.0 if self.exact_zero else float(self.ball.rad())

    @property
    def lower(self) -> float:
        return float(self.ball.lower())

    @property
    def upper(self) -> float:
        return float(self.ball.upper())

    def decimal(self, digits: int | None = None) -> str:
        if self.exact_zero:
            return "0"
        if digits is None:
            rad = self.certified_error
            digits = max(6, min(60, int(-math.log10(rad)) + 2 if rad > 0 else 40))
        return self.ball.mid().str(digits, radius=False)

    def __str__(self):
        return f"{self.decimal()} ±{self.certified_error:.3g} [{self.normalization}]"

    def to_json(self):
        return {"value": self.decimal(), "error": f"{self.certified_error:.3g}", "normalization": self.normalization}

    def halved(self) -> HeightValue:
        if self.normalization != PAPER:
            raise ValueError("already halved")
        with _precision(MAX_PRECISION):
            return HeightValue(self.ball / NORMALIZATION_FACTOR, HALVED, self.exact_zero)

    def pack(self) -> tuple:
        """Exact-midpoint transport form (arb balls do not pickle)."""
        (m, e), (rm, re) = self.ball.mid().man_exp(), self.ball.rad().man_exp()
        return (int(m), int(e), int(rm), int(re), self.normalization, self.exact_zero)

    @staticmethod
    def unpack(t: tuple) -> HeightValue:
        """Inverse of pack; the radius may round up by one ulp."""
        m, e, rm, re, norm, zero = t
        with _precision(max(m.bit_length(), rm.bit_length(), 2) + 16):
            ball = arb(arb(m) * arb(2) ** e, arb(rm) * arb(2) ** re)
        return HeightValue(ball, norm, zero)

    def __reduce__(self):
        return (HeightValue.unpack, (self.pack(),))

    def overlaps(self, other: HeightValue) -> bool:
        return self.ball.overlaps(other.ball)

    def scaled(self, k: int) -> HeightValue:
        with _precision(MAX_PRECISION):
            return HeightValue(self.ball * k, self.normalization, self.exact_zero)


ZERO_HEIGHT = HeightValue(arb(0), PAPER, True)


def _height_ball(P: CurvePoint, F: QuadField, precision: int) -> arb:
    data = height_data(P.curve)
    Pm = _to_minimal(P, data)
    total = weil_height(Pm.x, precision + 20)
    for place in arch_places(F):
        total += _farb(place.weight) * archimedean_correction(P, place, precision + 4)
    for p in data.primes:
        total += nonarchimedean_correction(P, p, F, precision + 4)
    return total


def canonical_height(
    P: CurvePoint,
    precision: int = DEFAULT_PRECISION,
    field: QuadField | None = None,
    normalization: str = PAPER,
    check_torsion: bool = True,
) -> HeightValue:
    """Canonical height with a certified error ball.

    ``field`` lets a point be viewed over a larger field than K(P); the result
    must not depend on it.  Torsion points return an exact zero.
    """
    if P.is_infinity:
        hv = ZERO_HEIGHT
    else:
        F = field or P.min_field
        if not P.min_field.is_rational and F != P.min_field:
            raise ValueError(f"{P} is not defined over {F}")
        try:
            with _precision(precision + 40):
                ball = _height_ball(P, F, precision)
        except PrecisionError:
            # torsion orbits can drive the doubling pair towards a common zero
            if torsion_test(P):
                return ZERO_HEIGHT
            if precision >= MAX_PRECISION:
                raise
            return canonical_height(P, 2 * precision, field, normalization, check_torsion)
        if ball.lower() > 0 or not check_torsion:
            hv = HeightValue(ball, PAPER)
        elif torsion_test(P):
            hv = ZERO_HEIGHT
        elif precision < MAX_PRECISION:
            return canonical_height(P, 2 * precision, field, normalization, check_torsion)
        else:
            raise PrecisionError(f"cannot separate the height of {P} from zero")
    return hv.halved() if normalization == HALVED else hv


def limit_oracle(P: CurvePoint, n: int, B_E: float, max_n: int = 5, digit_cap: int = 20000, precision: int = 64) -> tuple[float, float]:
    """Interval [4^-n h(2^n P) - 4^-n B_E, 4^-n h(2^n P) + 4^-n B_E] containing the canonical height of P."""
    if n > max_n:
        raise OracleUnavailableError(f"n={n} exceeds configured maximum {max_n}")
    Q = P
    for _ in range(n):
        Q = Q.double()
        if Q.is_infinity:
            break
        if max(len(str(Q.x.a)), len(str(Q.x.c))) > digit_cap:
            raise OracleUnavailableError("coordinate size exceeds digit cap")
    if Q.is_infinity:
        h = arb(0)
    else:
        h = weil_height(Q.x, precision)
    with _precision(precision):
        mid = h / 4**n
        lo = (mid - arb(B_E) / 4**n).lower()
        hi = (mid + arb(B_E) / 4**n).upper()
    return float(lo), float(hi)
