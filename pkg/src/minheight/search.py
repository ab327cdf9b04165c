"""Search for the point of smallest canonical height over fields of degree <= 2.

The pipeline: initial search for a witness P' with D' = hhat(P')[K(P'):Q],
the discriminant cutoff that reduces the problem to finitely many fields,
then an exhaustive bounded-height x-enumeration over those fields.

All enumeration happens on the global minimal model, where the height
difference bound applies; reported points are mapped back to the input model.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from flint import arb

from . import bounds as _bounds
from .curve import CurveModel, CurvePoint, torsion_test
from .heights import MAX_PRECISION, HeightValue, canonical_height
from .qfield import (
    QQ,
    QuadElement,
    QuadField,
    _precision,
    canonicalize,
    enumerate_fields,
    parse_element,
    rational,
    squarefree_decompose,
    weil_height,
)

log = logging.getLogger(__name__)

PROVED = "PROVED"
HEURISTIC = "HEURISTIC"
NO_POINT_FOUND = "NO_POINT_FOUND"


class ConfigError(ValueError):
    pass


class AmbiguousMinimumError(ArithmeticError):
    def __init__(self, candidates):
        self.candidates = candidates
        desc = "; ".join(f"{c.point} hhat*deg={c.lehmer}" for c in candidates)
        super().__init__(f"cannot separate the minimum: {desc}")


@dataclass
class SearchConfig:
    delta_max: float = 1e5
    weil_max: float = 50.0
    heuristic_disc_cap: float = 1000.0
    initial_effort_height: float = math.log(100)
    initial_effort_fields: int = 16
    precision_bits: int = 64
    workers: int = 1
    # caps that keep the non-certified paths finite
    initial_quadratic_height: float = 1.5
    heuristic_weil_cap: float = 2.0
    heuristic_rational_cap: float = math.log(100)
    bound_tier: str = "min"

    @classmethod
    def from_mapping(cls, values: dict) -> SearchConfig:
        known = {f.name: f for f in dc_fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            typ = type(getattr(cls(), key))
            try:
                kwargs[key] = typ(raw) if typ is not int else int(float(raw))
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> SearchConfig:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_mapping(parse_config_text(text))

    def validate(self):
        if self.delta_max < 1 or self.weil_max <= 0 or self.heuristic_disc_cap < 1:
            raise ConfigError("caps must be positive (delta_max, heuristic_disc_cap >= 1)")
        if self.workers < 1 or self.precision_bits < 16:
            raise ConfigError("workers >= 1 and precision_bits >= 16 required")
        if self.bound_tier not in ("min", "max", _bounds.GLOBAL_SILVERMAN, _bounds.CPS_QUADRATIC):
            raise ConfigError(f"unknown bound tier {self.bound_tier!r}")

    def to_json(self):
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}


def parse_config_text(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


# enumeration ---------------------------------------------------------------------


def _height_bound(cutoff: float) -> int:
    """Largest H >= 1 with log H <= cutoff."""
    c = cutoff * (1 + _TIE) + _TIE
    H = max(1, int(math.floor(math.exp(cutoff))))
    while math.log(H + 1) <= c:
        H += 1
    while H > 1 and math.log(H) > c:
        H -= 1
    return H


def rationals_up_to(cutoff: float) -> list[Fraction]:
    """All p/q with max(|p|, q) <= exp(cutoff), ordered by height then denominator."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    H = _height_bound(cutoff)
    out = {Fraction(p, q) for q in range(1, H + 1) for p in range(-H, H + 1) if math.gcd(p, q) == 1}
    return sorted(out, key=lambda x: (max(abs(x.numerator), x.denominator), x.denominator, x.numerator))


@lru_cache(maxsize=8)
def _kernel_table(n: int) -> np.ndarray:
    """Squarefree kernel (n with square factors divided out) for 0..n."""
    kern = np.arange(n + 1, dtype=np.int64)
    p = 2
    while p * p <= n:
        sq = p * p
        idx = np.arange(sq, n + 1, sq)
        while idx.size:
            hit = idx[kern[idx] % sq == 0]
            kern[hit] //= sq
            idx = hit
        p += 1
    return kern


def _table_size(n: int) -> int:
    return 1 << max(10, int(n).bit_length())


_FILTER_PRIMES = (1009, 1013, 1019, 1021, 1031, 1033, 1039, 1049, 1051, 1061)


@lru_cache(maxsize=None)
def _qr_table(l: int) -> np.ndarray:
    t = np.zeros(l, dtype=bool)
    t[(np.arange(l, dtype=np.int64) ** 2) % l] = True
    return t


@dataclass(frozen=True)
class EnumerationTask:
    """Leading coefficients lo <= A < hi of the minimal-polynomial box for one cutoff."""

    weil_cutoff: float
    A_lo: int
    A_hi: int
    disc_cap: float | None = None  # |disc F| bound, or None with target_d
    target_d: int | None = None
    g: tuple[int, int, int, int] | None = None  # 2y-discriminant, for the point prefilter


def make_tasks(weil_cutoff, chunks=1, disc_cap=None, target_d=None, g=None) -> list[EnumerationTask]:
    T = math.exp(2 * weil_cutoff) * (1 + 1e-9)
    Amax = int(math.floor(T))
    chunks = max(1, min(chunks, Amax))
    edges = [1 + (Amax * i) // chunks for i in range(chunks + 1)]
    return [
        EnumerationTask(weil_cutoff, edges[i], edges[i + 1], disc_cap, target_d, g)
        for i in range(chunks)
        if edges[i] < edges[i + 1]
    ]


# float cutoffs stand for real ones (log 2, ...): ties within this slack are kept
_TIE = 2.0**-50


def _borderline_ok(A, B, C, cutoff):
    x = canonicalize(-B, 1, 2 * A, B * B - 4 * A * C)
    with _precision(128):
        return not (weil_height(x, 128) > arb(cutoff) * (1 + _TIE) + _TIE)


def run_task(task: EnumerationTask) -> list[tuple[int, int, int]]:
    """Primitive irreducible (A, B, C) in the task's A-range passing every filter, sorted."""
    cutoff = task.weil_cutoff
    T = math.exp(2 * cutoff)
    Tb = int(math.floor(T * (1 + 1e-9)))
    Bs = np.arange(-2 * Tb, 2 * Tb + 1, dtype=np.int64)
    Cs = np.arange(-Tb, Tb + 1, dtype=np.int64)
    BB, CC = np.meshgrid(Bs, Cs, indexing="ij")
    BB = BB.ravel()
    CC = CC.ravel()
    kern = _kernel_table(_table_size(4 * Tb * Tb + 4 * Tb * Tb + 1))
    out = []
    for A in range(task.A_lo, task.A_hi):
        B, C = BB, CC
        keep = (C != 0) & (np.gcd(np.gcd(A, B), C) == 1)
        B, C = B[keep], C[keep]
        disc = B * B - 4 * A * C
        d = np.sign(disc) * kern[np.abs(disc)]
        keep = (d != 1) & (d != 0)
        B, C, disc, d = B[keep], C[keep], disc[keep], d[keep]
        fd = np.where(d % 4 == 1, d, 4 * d)
        if task.target_d is not None:
            keep = d == task.target_d
        else:
            keep = np.abs(fd) <= task.disc_cap
        B, C, disc = B[keep], C[keep], disc[keep]
        real = disc > 0
        sq = np.sqrt(np.where(real, disc, 0).astype(float))
        r1 = np.abs((-B + sq) / (2 * A))
        r2 = np.abs((-B - sq) / (2 * A))
        M = np.where(real, A * np.maximum(1, r1) * np.maximum(1, r2), np.maximum(A, C).astype(float))
        inside = M <= T * (1 - 1e-9)
        border = (~inside) & (M <= T * (1 + 1e-9))
        sel = inside.copy()
        for i in np.nonzero(border)[0]:
            sel[i] = _borderline_ok(A, int(B[i]), int(C[i]), cutoff)
        B, C = B[sel], C[sel]
        if task.g is not None and B.size:
            B, C = _norm_square_filter(A, B, C, task.g)
        out.extend((A, int(b), int(c)) for b, c in zip(B, C))
    return out


def _norm_square_filter(A, B, C, g):
    """Keep (A,B,C) for which A*Res(At^2+Bt+C, g) can be a square modulo each filter prime."""
    g3, g2, g1, g0 = g
    keep = np.ones(B.size, dtype=bool)
    for l in _FILTER_PRIMES:
        a = A % l
        b = B % l
        c = C % l
        u = (g3 % l * ((b * b - a * c) % l) - g2 % l * (a * b % l) + g1 % l * (a * a % l)) % l
        v = (g3 % l * (b * c % l) - g2 % l * (a * c % l) + g0 % l * (a * a % l)) % l
        R = (u * u % l * c - u * v % l * b + a * (v * v % l)) % l
        keep &= _qr_table(l)[(a * R) % l]
    return B[keep], C[keep]


def _run_tasks(tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_task, tasks))
    else:
        parts = [run_task(t) for t in tasks]
    return sorted(t for part in parts for t in part)


def quadratic_polys(weil_cutoff, disc_cap=None, target_d=None, g=None, workers=1) -> list[tuple[int, int, int]]:
    chunks = workers * 4 if workers > 1 else 1
    return _run_tasks(make_tasks(weil_cutoff, chunks, disc_cap, target_d, g), workers)


def enumerate_x(field: QuadField, weil_cutoff: float) -> Iterator[QuadElement]:
    """Elements of ``field`` of Weil height <= cutoff that generate it (all of them for Q)."""
    if weil_cutoff < 0:
        raise ValueError("weil_cutoff must be >= 0")
    if field.is_rational:
        for q in rationals_up_to(weil_cutoff):
            yield rational(q)
        return
    for A, B, C in quadratic_polys(weil_cutoff, target_d=field.d):
        D = B * B - 4 * A * C
        yield canonicalize(-B, 1, 2 * A, D)
        yield canonicalize(-B, -1, 2 * A, D)


# candidates ------------------------------------------------------------------------


@dataclass
class Candidate:
    point: CurvePoint  # on the minimal model
    height: HeightValue

    @property
    def degree(self) -> int:
        return self.point.degree

    @property
    def lehmer(self) -> HeightValue:
        return self.height.scaled(self.degree)

    def key(self):
        return (self.point.min_field.sort_key(), self.point.sort_key())


def _two_y_coeffs(M: CurveModel) -> tuple[int, int, int, int]:
    b2, b4, b6, _ = M.b_invariants
    return (4, int(b2), int(2 * b4), int(b6))


def _rational_x_points(M, xs, cutoff_deg2, field_ok, cutoff_deg1=None):
    """Points with rational x: over Q, or over Q(sqrt(s)) when the field passes ``field_ok``."""
    g3, g2, g1, g0 = _two_y_coeffs(M)
    out = []
    for x in xs:
        p, q = x.numerator, x.denominator
        n = q * (g3 * p**3 + g2 * p * p * q + g1 * p * q * q + g0 * q**3)
        hx = math.log(max(abs(p), q))
        if n == 0:
            continue  # 2-torsion
        s, _ = squarefree_decompose(n)
        if s == 1:
            if cutoff_deg1 is not None and hx > cutoff_deg1:
                continue
            F = QQ
        else:
            if hx > cutoff_deg2:
                continue
            F = QuadField(s)
            if not field_ok(F):
                continue
        pts = M.lift_x(rational(x), F)
        if pts:
            out.append(pts[0])
    return out


def _quadratic_x_points(M, polys):
    out = []
    for A, B, C in polys:
        x = canonicalize(-B, 1, 2 * A, B * B - 4 * A * C)
        pts = M.lift_x(x)
        if pts:
            out.append(pts[0])
    return out


def _height_job(args):
    P, prec = args
    return canonical_height(P, precision=prec, check_torsion=False).pack()


def _evaluate(points, precision, workers=1) -> list[Candidate]:
    points = sorted(points, key=lambda P: (P.min_field.sort_key(), P.sort_key()))
    if workers > 1 and len(points) > 8:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            hs = list(pool.map(_height_job, [(P, precision) for P in points], chunksize=4))
    else:
        hs = [_height_job((P, precision)) for P in points]
    # both paths go through the same packed form so results match bit for bit
    hs = [HeightValue.unpack(t) for t in hs]
    out = []
    for P, h in zip(points, hs):
        if h.lower <= 0:
            if torsion_test(P):
                continue
            h = canonical_height(P, precision=2 * precision)
            if h.exact_zero:
                continue
        out.append(Candidate(P, h))
    return out


def _automorphic(M: CurveModel, P: CurvePoint, Q: CurvePoint) -> bool:
    j = M.j_invariant
    if j not in (0, 1728):
        return False
    k = 3 if j == 0 else 2
    a = M.short_x(P.x) ** k
    b = M.short_x(Q.x) ** k
    return a.minpoly() == b.minpoly()


def equivalent(P: CurvePoint, Q: CurvePoint) -> bool:
    """True when hhat(P) = hhat(Q) for a structural reason (sign, conjugation, torsion, automorphism)."""
    if P.x == Q.x or P.x == Q.conjugate().x:
        return True
    M = P.curve
    FP, FQ = P.min_field, Q.min_field
    if FP == FQ or FP.is_rational or FQ.is_rational:
        for R in (Q, Q.conjugate()):
            for S in (P - R, P + R):
                if torsion_test(S):
                    return True
    return _automorphic(M, P, Q)


def _refine(c: Candidate, precision: int) -> Candidate:
    return Candidate(c.point, canonical_height(c.point, precision=precision))


def select_minimum(cands: list[Candidate], precision: int, metric="lehmer") -> Candidate:
    """Certified argmin of hhat*deg (or of hhat), escalating precision on overlaps."""
    if not cands:
        raise ValueError("no candidates")
    val = (lambda c: c.lehmer) if metric == "lehmer" else (lambda c: c.height)
    order = sorted(cands, key=lambda c: (val(c).upper, c.degree, c.key()))
    best = order[0]
    rivals = [c for c in order[1:] if val(c).lower <= val(best).upper]
    prec = precision
    while True:
        rivals = [c for c in rivals if not equivalent(best.point, c.point)]
        rivals = [c for c in rivals if val(c).overlaps(val(best))]
        if not rivals:
            return best
        if prec >= MAX_PRECISION:
            if metric != "lehmer":
                return best
            raise AmbiguousMinimumError([best] + rivals)
        prec *= 2
        best = _refine(best, prec)
        rivals = [_refine(c, prec) for c in rivals]
        pool = sorted([best] + rivals, key=lambda c: (val(c).upper, c.degree, c.key()))
        best, rivals = pool[0], pool[1:]


# pipeline -----------------------------------------------------------------------


@dataclass
class Witness:
    candidate: Candidate
    D_prime: float


def _inverse_transform(tr):
    u, r, s, t = tr
    return (1 / u, -r / u**2, -s / u, (r * s - t) / u**3)


def to_input_model(E: CurveModel, P: CurvePoint) -> CurvePoint:
    M, tr = E.minimal
    if M == E:
        return CurvePoint(E, P.x, P.y) if P.curve is not E else P
    Q = P.change_model(*_inverse_transform(tr))
    return CurvePoint(E, Q.x, Q.y)


def to_minimal_model(E: CurveModel, P: CurvePoint) -> CurvePoint:
    M, tr = E.minimal
    if M == E:
        return CurvePoint(M, P.x, P.y)
    Q = P.change_model(*tr)
    return CurvePoint(M, Q.x, Q.y)


def read_known_points(E: CurveModel, path) -> list[CurvePoint]:
    """Known points file: one ``x, y`` per line on the input model; '#' starts a comment."""
    out = []
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            xs, ys = line.split(",")
            x, y = parse_element(xs), parse_element(ys)
        except ValueError as exc:
            raise ValueError(f"{path}:{n}: cannot parse point: {exc}") from None
        if not E.contains(x, y):
            log.warning("%s:%d: point not on curve, skipped", path, n)
            continue
        P = CurvePoint(E, x, y)
        if torsion_test(P):
            continue
        out.append(P)
    return out


def _candidate_points(M, rational_cutoff, deg2_cutoff, quad_cutoff, field_ok, disc_cap, workers, deg1_cutoff=None):
    pts = _rational_x_points(M, rationals_up_to(rational_cutoff), deg2_cutoff, field_ok, deg1_cutoff)
    if quad_cutoff is not None and quad_cutoff >= 0:
        polys = quadratic_polys(quad_cutoff, disc_cap=disc_cap, g=_two_y_coeffs(M), workers=workers)
        pts += _quadratic_x_points(M, polys)
    return pts


def initial_search(E: CurveModel, config: SearchConfig | None = None, known_points=None) -> Witness | None:
    """Best witness by hhat*deg, or None (no point found within the configured effort)."""
    config = config or SearchConfig()
    M = E.minimal[0]
    fields = enumerate_fields(4 * max(config.initial_effort_fields, 1) + 8)
    allowed = [F for F in fields if not F.is_rational][: config.initial_effort_fields]
    allowed_set = set(allowed)
    cap = max((abs(F.disc) for F in allowed), default=1)
    pts = []
    if known_points:
        pts += [to_minimal_model(E, P) for P in read_known_points(E, known_points)]
    H = config.initial_effort_height
    qcap = min(config.initial_quadratic_height, H)
    found = _candidate_points(M, H, H, None, allowed_set.__contains__, cap, config.workers)
    polys = quadratic_polys(qcap, disc_cap=cap, g=_two_y_coeffs(M), workers=config.workers)
    found += [P for P in _quadratic_x_points(M, polys) if P.min_field in allowed_set]
    pts += found
    cands = _evaluate(_dedupe(pts), config.precision_bits, config.workers)
    if not cands:
        return None
    best = select_minimum(cands, config.precision_bits)
    return Witness(best, _up(best.lehmer.upper))


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


def _dedupe(points):
    seen = set()
    out = []
    for P in points:
        k = (P.x, P.y)
        if k in seen or (P.x, (-P).y) in seen:
            continue
        seen.add(k)
        out.append(P)
    return out


@dataclass
class SearchCertificate:
    curve: CurveModel
    status: str
    witness: Candidate | None = None
    D_prime: float | None = None
    bound: _bounds.HeightDifferenceBound | None = None
    cutoffs: _bounds.SearchCutoffs | None = None
    searched_weil_cutoff: dict = field(default_factory=dict)
    fields_disc_cap: float | None = None
    fields_searched: list[QuadField] = field(default_factory=list)
    caps: dict = field(default_factory=dict)
    winner: Candidate | None = None
    smallest: Candidate | None = None
    points_examined: int = 0

    @property
    def B_E(self) -> float | None:
        return None if self.bound is None else self.bound.h_minus_hhat

    def _cand_json(self, c: Candidate | None):
        if c is None:
            return None
        P = to_input_model(self.curve, c.point)
        return {
            "point": P.to_json(),
            "min_field": c.point.min_field.d,
            "field_disc": c.point.min_field.disc,
            "degree": c.degree,
            "height": c.height.to_json(),
            "height_times_degree": c.lehmer.decimal(),
        }

    def to_json(self):
        return {
            "curve": self.curve.to_json(),
            "status": self.status,
            "witness": self._cand_json(self.witness),
            "D_prime": self.D_prime,
            "B_E": None if self.bound is None else {"tier": self.bound.tier, "value": self.B_E},
            "cutoffs": None if self.cutoffs is None else self.cutoffs.to_json(),
            "searched_weil_cutoff": {str(k): v for k, v in self.searched_weil_cutoff.items()},
            "fields_disc_cap": self.fields_disc_cap,
            "fields_searched": [F.d for F in self.fields_searched],
            "caps": self.caps,
            "winner": self._cand_json(self.winner),
            "smallest_height_point": self._cand_json(self.smallest),
            "points_examined": self.points_examined,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def exhaustive_search(
    M: CurveModel,
    weil_cutoffs: dict[int, float],
    disc_cap: float,
    quad_cutoff: float,
    precision: int,
    workers: int = 1,
    rational_cutoff: float | None = None,
) -> list[Candidate]:
    """Every non-torsion point (up to sign and conjugation) with the given per-degree x-height bounds."""
    field_ok = lambda F: abs(F.disc) <= disc_cap
    rc = max(weil_cutoffs[1], weil_cutoffs[2]) if rational_cutoff is None else rational_cutoff
    pts = _candidate_points(M, rc, weil_cutoffs[2], quad_cutoff, field_ok, disc_cap, workers, weil_cutoffs[1])
    return _evaluate(_dedupe(pts), precision, workers)


def certify_minimum(E: CurveModel, config: SearchConfig | None = None, known_points=None, bound=None) -> SearchCertificate:
    config = config or SearchConfig()
    M = E.minimal[0]
    caps = {
        "delta_max": config.delta_max,
        "weil_max": config.weil_max,
        "heuristic_disc_cap": config.heuristic_disc_cap,
        "heuristic_weil_cap": config.heuristic_weil_cap,
        "heuristic_rational_cap": config.heuristic_rational_cap,
    }
    wit = initial_search(E, config, known_points)
    if wit is None:
        return SearchCertificate(E, NO_POINT_FOUND, caps=caps)
    B = bound or _bounds.select_bound(E, config.bound_tier)
    cut = _bounds.search_cutoffs(wit.D_prime, B.h_minus_hhat)
    delta = max(cut.delta_cutoff.values())
    weil = max(cut.weil_cutoff.values())
    if delta < config.delta_max and weil < config.weil_max:
        status = PROVED
        disc_cap = delta
        wc = dict(cut.weil_cutoff)
        rational_cutoff = None
    else:
        status = HEURISTIC
        disc_cap = min(delta, config.heuristic_disc_cap)
        wc = {
            1: min(cut.weil_cutoff[1], config.heuristic_rational_cap),
            2: min(cut.weil_cutoff[2], config.heuristic_weil_cap),
        }
        rational_cutoff = min(cut.weil_cutoff[1], max(config.heuristic_rational_cap, wc[2]))
    cands = exhaustive_search(M, wc, disc_cap, wc[2], config.precision_bits, config.workers, rational_cutoff)
    cands.append(wit.candidate)
    winner = select_minimum(_unique(cands), config.precision_bits)
    smallest = select_minimum(_unique(cands), config.precision_bits, metric="height")
    fields = enumerate_fields(disc_cap)
    return SearchCertificate(
        E,
        status,
        witness=_refine(wit.candidate, 128),
        D_prime=wit.D_prime,
        bound=B,
        cutoffs=cut,
        searched_weil_cutoff=wc,
        fields_disc_cap=disc_cap,
        fields_searched=fields,
        caps=caps,
        winner=_refine(winner, 128),
        smallest=_refine(smallest, 128),
        points_examined=len(cands),
    )


def _unique(cands):
    seen = {}
    for c in cands:
        seen.setdefault((c.point.x, c.point.y), c)

    return sorted(seen.values(), key=Candidate.key)


def replay_certificate(E: CurveModel, cert: dict, precision: int = 64, workers: int = 1) -> dict | None:
    """Rerun the recorded exhaustive search; returns the recomputed winner JSON."""
    M = E.minimal[0]
    wc = {int(k): v for k, v in cert["searched_weil_cutoff"].items()}
    disc_cap = cert["fields_disc_cap"]
    if [F.d for F in enumerate_fields(disc_cap)] != cert["fields_searched"]:
        raise ValueError("recorded field list does not match the recorded discriminant cap")
    rc = None if cert["status"] == PROVED else min(
        cert["cutoffs"]["weil_cutoff"]["1"], max(cert["caps"]["heuristic_rational_cap"], wc[2])
    )
    cands = exhaustive_search(M, wc, disc_cap, wc[2], precision, workers, rc)
    wpt = cert["witness"]["point"]
    W = to_minimal_model(E, E.point(parse_element(wpt["x"]), parse_element(wpt["y"])))
    cands.append(Candidate(W, canonical_height(W, precision=precision)))
    winner = _refine(select_minimum(_unique(cands), precision), 128)
    tmp = SearchCertificate(E, cert["status"], winner=winner)
    return tmp.to_json()["winner"]


# statistics ---------------------------------------------------------------------


def conjecture_stats(rows: Iterable[dict]) -> dict:
    """Field frequencies and empirical Lehmer / Lang statistics over dataset rows.

    Rows need ``field_disc`` and ``height``; ``degree``, ``lang_ME`` and
    ``min_disc`` are used when present.
    """
    freq: dict[int, int] = {}
    lehmer = []
    lang = []
    scatter = []
    for row in rows:
        disc = row.get("field_disc")
        h = row.get("height")
        if disc in (None, "") or h in (None, ""):
            continue
        disc = int(disc)
        freq[disc] = freq.get(disc, 0) + 1
        hv = float(h)
        deg = int(row.get("degree") or (1 if disc == 1 else 2))
        lehmer.append((hv * deg, row.get("label")))
        ME = row.get("lang_ME")
        ratio = None
        if ME not in (None, ""):
            ratio = hv / float(ME)
            lang.append((ratio, row.get("label")))
        scatter.append(
            {
                "label": row.get("label"),
                "height": hv,
                "min_disc": row.get("min_disc"),
                "lang_ME": ME,
                "ratio": ratio,
            }
        )
    table = sorted(freq.items(), key=lambda kv: (-kv[1], abs(kv[0]), kv[0] < 0))
    return {
        "rows": len(scatter),
        "field_frequency": table,
        "min_height_times_degree": min(lehmer, default=None),
        "max_height_times_degree": max(lehmer, default=None),
        "min_lang_ratio": min(lang, default=None),
        "max_lang_ratio": max(lang, default=None),
        "scatter": scatter,
    }
