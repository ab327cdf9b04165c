"""Explicit bounds: height-difference bounds, the discriminant cutoff, the search cutoffs.

All bounds are in the normalisation h(P) = h(x(P)), canonical height
lim 4^-n h(2^n P).  Quantities stated in the literature for the convention
that halves x-heights are converted by ``NORMALIZATION_FACTOR``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from flint import arb

from .curve import CurveModel
from .heights import NORMALIZATION_FACTOR, HeightData, HeightValue, height_data, _ord
from .qfield import _precision

log = logging.getLogger(__name__)

GLOBAL_SILVERMAN = "GLOBAL_SILVERMAN"
CPS_QUADRATIC = "CPS_QUADRATIC"

# Silverman (1990), halved-x convention:
#   -h(j)/8 - h(D)/12 - 0.973 <= hhat - h/2 <= h(j)/12 + h(D)/12 + 1.07
SILVERMAN_LOWER = (Fraction(1, 8), Fraction(1, 12), 0.973)
SILVERMAN_UPPER = (Fraction(1, 12), Fraction(1, 12), 1.07)

_UP = 1 + 1e-12


def _up(x: float) -> float:
    return math.nextafter(x * _UP + 1e-15, math.inf)


@dataclass
class HeightDifferenceBound:
    """Bound on the naive/canonical height gap, for every point over every field of degree <= 2.

    ``h_minus_hhat`` bounds h(P) - hhat(P) above (what the search needs);
    ``hhat_minus_h`` bounds hhat(P) - h(P) above; ``value`` bounds |h - hhat|.
    """

    tier: str
    h_minus_hhat: float
    hhat_minus_h: float
    per_place: list[dict] = field(default_factory=list)
    warning: str | None = None
    normalization: str = "paper"

    @property
    def value(self) -> float:
        return max(self.h_minus_hhat, self.hhat_minus_h)

    def to_json(self):
        return {
            "tier": self.tier,
            "value": self.value,
            "h_minus_hhat": self.h_minus_hhat,
            "hhat_minus_h": self.hhat_minus_h,
            "per_place": self.per_place,
            "normalization": self.normalization,
            "warning": self.warning,
        }


def _height_rational(q: Fraction) -> float:
    if q == 0:
        return 0.0
    return math.log(max(abs(q.numerator), abs(q.denominator)))


def global_diff_bound(E: CurveModel) -> HeightDifferenceBound:
    M = E.minimal[0]
    hj = _height_rational(M.j_invariant)
    hD = math.log(abs(M.discriminant))
    lo = SILVERMAN_LOWER
    hi = SILVERMAN_UPPER
    h_minus = NORMALIZATION_FACTOR * (float(lo[0]) * hj + float(lo[1]) * hD + lo[2])
    hhat_minus = NORMALIZATION_FACTOR * (float(hi[0]) * hj + float(hi[1]) * hD + hi[2])
    return HeightDifferenceBound(
        GLOBAL_SILVERMAN,
        _up(h_minus),
        _up(hhat_minus),
        per_place=[{"h_j": hj, "h_disc": hD}],
    )


# archimedean: inf of max(|phi|, |psi|) on the unit bidisc of C^2 ----------------------


def _taylor_coeffs(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Rows j: |f^(j)(z)/j!| for f = sum c[i] z^i (c ascending)."""
    deg = len(c) - 1
    out = np.zeros((deg + 1, z.size))
    for j in range(deg + 1):
        acc = np.zeros(z.size, dtype=complex)
        for i in range(deg, j - 1, -1):
            acc = acc * z + math.comb(i, j) * c[i]
        out[j] = np.abs(acc)
    return out


def _disc_min_lower(polys, tol=1e-3, max_rounds=60):
    """Lower bound for min over |z| <= 1 of max_k |polys[k](z)| (coefficient lists ascending)."""
    n0 = 32
    h = 1.0 / n0
    g = (np.arange(n0 * 2) + 0.5) * h - 1.0
    cx, cy = np.meshgrid(g, g)
    centres = (cx + 1j * cy).ravel()
    half = np.full(centres.size, h)
    cs = [np.asarray(p, dtype=complex) for p in polys]
    best_upper = math.inf
    done_lower = math.inf
    for _ in range(max_rounds):
        rho = half * math.sqrt(2)
        keep = np.abs(centres) - rho <= 1.0
        centres, half, rho = centres[keep], half[keep], rho[keep]
        if centres.size == 0:
            break
        lbs = []
        vals = []
        for c in cs:
            t = _taylor_coeffs(c, centres)
            vals.append(t[0])
            rpow = np.vstack([rho**j for j in range(1, t.shape[0])])
            lbs.append(t[0] - (t[1:] * rpow).sum(axis=0))
        lb = np.maximum.reduce(lbs)
        val = np.maximum.reduce(vals)
        inside = np.abs(centres) <= 1.0
        if inside.any():
            best_upper = min(best_upper, float(val[inside].min()))
        settled = lb >= best_upper * (1 - tol)
        if settled.any():
            done_lower = min(done_lower, float(lb[settled].min()))
        centres, half = centres[~settled], half[~settled]
        if centres.size == 0:
            break
        h2 = half / 2
        offs = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
        centres = np.concatenate([centres + h2 * (a + 1j * b) for a, b in offs])
        half = np.concatenate([h2] * 4)
    else:
        rho = half * math.sqrt(2)
        raise ArithmeticError("archimedean minimisation did not converge")
    return done_lower * (1 - 1e-9), best_upper


@lru_cache(maxsize=256)
def arch_epsilon(E: CurveModel) -> tuple[float, float]:
    """Certified lower bound and attained value of inf max(|phi|,|psi|) over max(|X|,|Z|) = 1 in C^2."""
    data = height_data(E)
    phi = data.phi  # X^4 ... Z^4
    psi = data.psi
    # chart (t, 1), |t| <= 1: coefficients ascending in t
    chart1 = [list(reversed(phi)), list(reversed(psi))]
    # chart (1, s), |s| <= 1
    chart2 = [list(phi), list(psi)]
    lo1, up1 = _disc_min_lower(chart1)
    lo2, up2 = _disc_min_lower(chart2)
    return min(lo1, lo2), min(up1, up2)


# non-archimedean: sup of the doubling defect over O_v, for every F_v of degree <= 2 ----


@dataclass(frozen=True)
class LocalExtension:
    """Z_p[w], w^2 = t w + n, with uniformiser pi and residue representatives."""

    p: int
    name: str
    t: int
    n: int
    e: int
    pi: tuple[int, int]
    residues: tuple[tuple[int, int], ...]

    def mul(self, x, y):
        a0, a1 = x
        b0, b1 = y
        c = a1 * b1
        return (a0 * b0 + self.n * c, a0 * b1 + a1 * b0 + self.t * c)

    def val(self, x) -> Fraction | None:
        a0, a1 = x
        if self.t == 0 and self.n == 0:
            return None if a0 == 0 else Fraction(_ord(a0, self.p))
        N = a0 * a0 + self.t * a0 * a1 - self.n * a1 * a1
        return None if N == 0 else Fraction(_ord(N, self.p), 2)


def _first_nonresidue(p):
    return next(a for a in range(2, p) if pow(a, (p - 1) // 2, p) == p - 1)


def local_extensions(p: int) -> list[LocalExtension]:
    """Q_p and its quadratic extensions (three for odd p, seven for p = 2)."""
    ints = tuple((r, 0) for r in range(p))
    pairs = tuple((a, b) for a in range(p) for b in range(p))
    out = [LocalExtension(p, f"Q{p}", 0, 0, 1, (p, 0), ints)]
    if p == 2:
        out.append(LocalExtension(2, "Q2(sqrt(5))", 1, 1, 1, (2, 0), pairs))
        for d in (-1, 3):
            out.append(LocalExtension(2, f"Q2(sqrt({d}))", 0, d, 2, (1, 1), ints))
        for d in (2, -2, 6, -6):
            out.append(LocalExtension(2, f"Q2(sqrt({d}))", 0, d, 2, (0, 1), ints))
    else:
        u = _first_nonresidue(p)
        out.append(LocalExtension(p, f"Q{p}(sqrt({u}))", 0, u, 1, (p, 0), pairs))
        out.append(LocalExtension(p, f"Q{p}(sqrt({p}))", 0, p, 2, (0, 1), ints))
        out.append(LocalExtension(p, f"Q{p}(sqrt({p * u}))", 0, p * u, 2, (0, 1), ints))
    return out


def _taylor_local(ext: LocalExtension, coeffs_asc, a):
    """Taylor coefficients f_j(a), j = 0..deg, in the extension ring."""
    deg = len(coeffs_asc) - 1
    powers = [(1, 0)]
    for _ in range(deg):
        powers.append(ext.mul(powers[-1], a))
    out = []
    for j in range(deg + 1):
        s0 = s1 = 0
        for i in range(j, deg + 1):
            c = math.comb(i, j) * coeffs_asc[i]
            if c:
                pw = powers[i - j]
                s0 += c * pw[0]
                s1 += c * pw[1]
        out.append((s0, s1))
    return out


def _wval(ext, x):
    """Valuation in units of the uniformiser (None for zero)."""
    v = ext.val(x)
    return None if v is None else int(v * ext.e)


def _div_pi(ext, x, M):
    """x / pi modulo p^M, assuming pi divides x."""
    p = ext.p
    if ext.e == 1:
        assert x[0] % p == 0 and x[1] % p == 0
        return (x[0] // p, x[1] // p)
    a0, a1 = ext.pi
    conj = (a0 + ext.t * a1, -a1)
    N = a0 * a0 + ext.t * a0 * a1 - ext.n * a1 * a1
    y = ext.mul(x, conj)
    assert y[0] % p == 0 and y[1] % p == 0
    u = N // p
    inv = pow(u, -1, p**M)
    q = p**M
    return ((y[0] // p) * inv % q, (y[1] // p) * inv % q)


def _residue(ext, x):
    p = ext.p
    if ext.e == 1:
        return (x[0] % p, x[1] % p)
    # omega mod pi: 0 when pi = omega, -1 when pi = 1 + omega
    w = 0 if ext.pi == (0, 1) else -1
    return ((x[0] + w * x[1]) % p, 0)


class _ResidueField:
    def __init__(self, ext):
        self.ext = ext
        self.p = ext.p
        self.deg = 2 if ext.e == 1 and ext.n else 1
        if self.deg == 2:
            from flint import fmpz_mod_poly_ctx, fq_default_ctx, fq_default_poly_ctx

            C = fmpz_mod_poly_ctx(self.p)
            self.F = fq_default_ctx(self.p, 2, modulus=C([-ext.n, -ext.t, 1]))
            self.z = self.F.gen()
            self.R = fq_default_poly_ctx(self.F)

    def roots(self, coeffs):
        """Distinct roots of sum coeffs[j] h^j (coeffs are residue pairs), as pairs."""
        if self.deg == 1:
            from flint import nmod_poly

            f = nmod_poly([c[0] for c in coeffs], self.p)
            return [(int(r), 0) for r, _ in f.roots()]
        f = self.R([c[0] + c[1] * self.z for c in coeffs])
        out = []
        for r, _ in f.roots():
            lst = [int(c) for c in r.to_list()] + [0, 0]
            out.append((lst[0], lst[1]))
        return out

    @property
    def size(self):
        return self.p**self.deg


def _leading(ext, coeffs_asc, a, k, pik):
    """Minimal valuation m over the class a + pi^k O and the reduced leading polynomial."""
    tay = _taylor_local(ext, coeffs_asc, a)
    terms = []
    pw = (1, 0)
    for j, c in enumerate(tay):
        y = ext.mul(c, pw)
        w = _wval(ext, y)
        if w is not None:
            terms.append((j, w, y))
        pw = ext.mul(pw, pik)
    m = min(w for _, w, _ in terms)
    red = [(0, 0)] * len(tay)
    for j, w, y in terms:
        if w == m:
            for _ in range(m):
                y = _div_pi(ext, y, m + 2)
            red[j] = _residue(ext, y)
    while len(red) > 1 and red[-1] == (0, 0):
        red.pop()
    return m, red


def sup_local_defect(data: HeightData, ext: LocalExtension, max_depth: int | None = None) -> Fraction:
    """sup over integral x in ext of min(v(phi(x,1)), v(psi(x,1))), in units with v(p) = 1.

    Residue-class tree: on a + pi^k O the valuation of f is its leading Taylor
    valuation m except on the (at most deg f) residue classes where the
    reduced leading polynomial vanishes; only those are refined.
    """
    phi = list(reversed(data.phi))
    psi = list(reversed(data.psi))
    vres = _ord(data.resultant, ext.p)
    if max_depth is None:
        max_depth = ext.e * (2 * vres + 8)
    field = _ResidueField(ext)
    best = 0
    stack = [((0, 0), 0, (1, 0))]  # class a + pi^k O, with pi^k
    while stack:
        a, k, pik = stack.pop()
        mf, rf = _leading(ext, phi, a, k, pik)
        mg, rg = _leading(ext, psi, a, k, pik)
        if k >= max_depth:
            raise ArithmeticError(f"residue tree for {ext.name} exceeded depth {max_depth}")
        roots_f = field.roots(rf) if len(rf) > 1 else []
        roots_g = field.roots(rg) if len(rg) > 1 else []
        special = set(roots_f) | set(roots_g)
        if len(special) < field.size:
            best = max(best, min(mf, mg))
        nxt = ext.mul(pik, ext.pi)
        for h in special:
            # v(f) = mf on this child unless h is a root of the reduced polynomial
            uf = None if h in roots_f else mf
            ug = None if h in roots_g else mg
            if uf is not None and uf <= mg + 1 and ug is None and uf <= best:
                continue
            if ug is not None and ug <= mf + 1 and uf is None and ug <= best:
                continue
            step = ext.mul(pik, h)
            stack.append(((a[0] + step[0], a[1] + step[1]), k + 1, nxt))
    result = Fraction(best, ext.e)
    if result > vres:
        raise ArithmeticError("local defect exceeds the resultant valuation")
    return result


def cps_quadratic_diff_bound(E: CurveModel) -> HeightDifferenceBound:
    data = height_data(E)
    per_place = []
    try:
        eps_lo, eps_val = arch_epsilon(E)
        arch = math.log(1 / eps_lo) / 3
        per_place.append({"place": "inf", "epsilon_lower": eps_lo, "epsilon_attained": eps_val, "contribution": _up(arch)})
        total = arch
        for p in data.primes:
            vals = {}
            for ext in local_extensions(p):
                vals[ext.name] = sup_local_defect(data, ext)
            worst = max(vals.values())
            contrib = float(worst) * math.log(p) / 3
            per_place.append(
                {"place": p, "sup_defect": {k: str(v) for k, v in vals.items()}, "contribution": _up(contrib)}
            )
            total += contrib
    except ArithmeticError as exc:
        log.warning("CPS tier unavailable for %s: %s; falling back to the global bound", E, exc)
        g = global_diff_bound(E)
        g.warning = f"cps tier fell back to global: {exc}"
        return g
    hhat_minus = data.defect_upper / 3
    return HeightDifferenceBound(CPS_QUADRATIC, _up(total), _up(hhat_minus), per_place=per_place)


def height_difference_bounds(E: CurveModel) -> dict[str, HeightDifferenceBound]:
    return {GLOBAL_SILVERMAN: global_diff_bound(E), CPS_QUADRATIC: cps_quadratic_diff_bound(E)}


def select_bound(E: CurveModel, mode: str = "min") -> HeightDifferenceBound:
    """The bound the search engine uses: ``min``/``max`` over tiers, or a named tier."""
    tiers = height_difference_bounds(E)
    if mode in tiers:
        return tiers[mode]
    key = lambda b: b.h_minus_hhat
    if mode == "min":
        return min(tiers.values(), key=key)
    if mode == "max":
        return max(tiers.values(), key=key)
    raise ValueError(f"unknown bound selection {mode!r}")


# discriminant and search cutoffs ----------------------------------------------------


def silverman_height_floor(abs_disc: float, d: int, delta_K: int = 1) -> float:
    """Lower bound for h(P), P non-torsion with K(P) = F, [F:K] = d, |disc F| = abs_disc."""
    if d < 2:
        raise ValueError("the floor needs degree d >= 2")
    if abs_disc < 1:
        raise ValueError("abs_disc must be >= 1")
    return (math.log(abs_disc) / d - delta_K * math.log(d)) / (2 * d - 2)


def discriminant_cutoff(D: float, B_E: float, d: int, delta_K: int = 1) -> float:
    """exp(d delta_K log d + d(2d-2) B_E + (2d-2) D), rounded upward."""
    if D < 0 or B_E < 0 or d < 1:
        raise ValueError("need D >= 0, B_E >= 0, d >= 1")
    with _precision(128):
        expo = arb(d * (2 * d - 2)) * arb(B_E) + arb(2 * d - 2) * arb(D)
        val = arb(d) ** (d * delta_K) * expo.exp()
        return float(val.upper()) if not val.is_exact() else float(val)


@dataclass
class SearchCutoffs:
    D_prime: float
    B_E: float
    delta_cutoff: dict[int, float]
    weil_cutoff: dict[int, float]

    def to_json(self):
        return {
            "D_prime": self.D_prime,
            "B_E": self.B_E,
            "delta_cutoff": {str(k): v for k, v in self.delta_cutoff.items()},
            "weil_cutoff": {str(k): v for k, v in self.weil_cutoff.items()},
        }


def search_cutoffs(D_prime: float, B_E: float, delta_K: int = 1) -> SearchCutoffs:
    if D_prime < 0:
        raise ValueError("D_prime must be >= 0")
    delta = {d: discriminant_cutoff(D_prime, B_E, d, delta_K) for d in (1, 2)}
    weil = {d: (_up(D_prime / d + B_E) if D_prime or B_E else 0.0) for d in (1, 2)}
    return SearchCutoffs(D_prime, B_E, delta, weil)


def lang_invariant(E: CurveModel, h_hat: HeightValue) -> tuple[float, float]:
    """(M_E, hhat / M_E) with M_E = max(h(j), log|Delta_min|, 1)."""
    M = E.minimal[0]
    ME = max(_height_rational(M.j_invariant), math.log(abs(M.discriminant)), 1.0)
    return ME, h_hat.value / ME
