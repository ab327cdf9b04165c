"""Acceptance criteria 1-9, one reported line per criterion."""
from __future__ import annotations

import dataclasses
import json
import math
import os
import random
import time
from importlib.resources import files

import pytest
from flint import arb

from _oracles import mahler_within, quadratic_brute, rationals_brute
from conftest import ACCEPTANCE, curve
from minheight import cli, search
from minheight.bounds import (
    CPS_QUADRATIC,
    GLOBAL_SILVERMAN,
    discriminant_cutoff,
    height_difference_bounds,
    search_cutoffs,
    select_bound,
)
from minheight.curve import torsion_test
from minheight.dataset import read_rows
from minheight.heights import HALVED, canonical_height, limit_oracle
from minheight.qfield import QQ, _precision, enumerate_fields, weil_height
from minheight.search import HEURISTIC, PROVED, SearchConfig, certify_minimum, conjecture_stats, enumerate_x, replay_certificate

RECORD = 0.0099641079999


def report(n, ok, detail, capsys):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def _record_point():
    E = curve("1470l1")
    return E, E.point(27, -119)


def _pool(names=("11a1", "14a1", "37a1", "43a1", "389a1", "1470l1", "36a1", "x3mx")):
    out = []
    for name in names:
        E = curve(name)
        M = E.minimal[0]
        pts = search._candidate_points(M, math.log(30), math.log(30), 1.2, lambda F: abs(F.disc) <= 40, 40, 1)
        out += [(name, P) for P in search._dedupe(pts) if not torsion_test(P)]
    return out


# 1 -------------------------------------------------------------------------------


def test_criterion_1_record_point(capsys):
    E, P = _record_point()
    t0 = time.perf_counter()
    h = canonical_height(P)
    dt = time.perf_counter() - t0
    ok = abs(h.value - RECORD) <= 1e-9 and h.certified_error < 1e-9 and dt < 1.0
    report(1, ok, f"hhat = {h.decimal(16)}, |diff| = {abs(h.value - RECORD):.2e}, {dt:.3f} s", capsys)


# 2 -------------------------------------------------------------------------------


def test_criterion_2_normalisation(capsys):
    E, P = _record_point()
    h = canonical_height(P, precision=128)
    B = select_bound(E, "max").value
    lo, hi = limit_oracle(P, 4, B)
    half = canonical_height(P, precision=128, normalization=HALVED)
    with _precision(128):
        ratio = h.ball / half.ball
    ok = lo <= h.value <= hi and ratio.contains(2) and abs(float(ratio.mid()) - 2) < 1e-30
    report(2, ok, f"oracle n=4 [{lo:.6f}, {hi:.6f}] contains {h.value:.10f}; ratio to halved-x = {float(ratio.mid())}", capsys)


# 3 -------------------------------------------------------------------------------


def test_criterion_3_cutoff_formula(capsys):
    vals = [discriminant_cutoff(0, 0, 2, 1)] + [discriminant_cutoff(D, B, 1, 1) for D, B in ((0, 0), (0.3, 1.7), (5, 9), (1e-3, 40))]
    ok = vals[0] == 4 and all(v == 1 for v in vals[1:])
    report(3, ok, f"cutoff(0,0,2,1) = {vals[0]!r}; degree-1 values {vals[1:]}", capsys)


# 4 -------------------------------------------------------------------------------


def test_criterion_4_bound_audit(capsys):
    t0 = time.perf_counter()
    rng = random.Random(20240101)
    sample = rng.sample(_pool(), 100)
    curves = {n for n, _ in sample}
    fields = {P.min_field.d for _, P in sample if not P.min_field.is_rational}
    violations = {GLOBAL_SILVERMAN: 0, CPS_QUADRATIC: 0}
    worst = {GLOBAL_SILVERMAN: 0.0, CPS_QUADRATIC: 0.0}
    tiers = {n: height_difference_bounds(curve(n)) for n in curves}
    for name, P in sample:
        hv = canonical_height(P, precision=64)
        h = weil_height(P.x, 64)
        with _precision(128):
            diff = h - hv.ball
        for tier, b in tiers[name].items():
            up = float(diff.upper())
            dn = float(-diff.lower())
            if up > b.h_minus_hhat or dn > b.hhat_minus_h or max(abs(up), abs(dn)) > b.value:
                violations[tier] += 1
            worst[tier] = max(worst[tier], up / b.h_minus_hhat)
    dt = time.perf_counter() - t0
    ok = len(sample) == 100 and len(curves) >= 5 and len(fields) >= 5 and sum(violations.values()) == 0 and dt < 300
    detail = (
        f"{len(sample)} points, {len(curves)} curves, {len(fields)} quadratic fields, "
        f"violations {violations}, worst (h - hhat)/B {{{', '.join(f'{k}: {v:.3f}' for k, v in worst.items())}}}, {dt:.1f} s"
    )
    report(4, ok, detail, capsys)


# 5 -------------------------------------------------------------------------------


def test_criterion_5_enumeration_completeness(capsys):
    t0 = time.perf_counter()
    brute = quadratic_brute(1.5)
    bad = []
    total = 0
    for cutoff in (0.0, math.log(2), 1.0, 1.25, 1.5):
        got_q = [x.to_fraction() for x in enumerate_x(QQ, cutoff)]
        want_q = rationals_brute(cutoff)
        if len(got_q) != len(want_q) or set(got_q) != want_q:
            bad.append(("Q", cutoff))
        total += len(got_q)
        for F in enumerate_fields(20)[1:]:
            want = {t for t in brute.get(F.d, ()) if mahler_within(t, cutoff)}
            xs = list(enumerate_x(F, cutoff))
            polys = [x.minpoly() for x in xs]
            if set(polys) != want or len(xs) != 2 * len(want) or len(set(xs)) != len(xs):
                bad.append((F.d, cutoff))
            total += len(xs)
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    report(5, ok, f"{total} elements over Q and {len(enumerate_fields(20)) - 1} fields, mismatches {bad}, {dt:.1f} s", capsys)


# 6 -------------------------------------------------------------------------------


def test_criterion_6_height_laws(capsys):
    t0 = time.perf_counter()
    rng = random.Random(6)
    pool = _pool(("11a1", "37a1", "43a1", "389a1", "x3mx"))
    by_field = {}
    for name, P in pool:
        by_field.setdefault((name, P.min_field), []).append(P)
    groups = [g for g in by_field.values() if len(g) >= 2]
    failures = []

    def H(R):
        return canonical_height(R, precision=96).ball

    for _ in range(20):
        g = rng.choice(groups)
        P, Q = rng.sample(g, 2)
        hP, hQ = H(P), H(Q)
        with _precision(256):
            checks = {
                "2P": H(P * 2) - 4 * hP,
                "3P": H(P * 3) - 9 * hP,
                "-P": H(-P) - hP,
                "parallelogram": H(P + Q) + H(P - Q) - 2 * hP - 2 * hQ,
                "galois": H(P.conjugate()) - hP,
            }
        failures += [(str(P), k) for k, v in checks.items() if not v.contains(0)]
    dt = time.perf_counter() - t0
    ok = not failures and dt < 120
    report(6, ok, f"20 random points, 5 laws each, failures {failures}, {dt:.1f} s", capsys)


# 7 and 8 -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def proved37():
    return certify_minimum(curve("37a1"), SearchConfig())


def test_criterion_7_operating_points(proved37, capsys):
    c11 = certify_minimum(curve("11a1"), SearchConfig())
    js = json.loads(proved37.dumps())
    replay = replay_certificate(curve("37a1"), js)
    again = certify_minimum(curve("37a1"), SearchConfig()).dumps()
    ok = c11.status == HEURISTIC and proved37.status == PROVED and replay == js["winner"] and again == proved37.dumps()
    detail = (
        f"11a1 {c11.status} (Delta cutoff {max(c11.cutoffs.delta_cutoff.values()):.3g}); "
        f"37a1 {proved37.status}, {len(proved37.fields_searched)} fields, replay identical {replay == js['winner']}"
    )
    report(7, ok, detail, capsys)


def test_criterion_8_argmin_invariance(proved37, capsys):
    E = curve("37a1")
    B = proved37.bound
    g = height_difference_bounds(E)[GLOBAL_SILVERMAN]
    literal = search_cutoffs(proved37.D_prime, g.h_minus_hhat)
    larger = dataclasses.replace(
        B,
        h_minus_hhat=B.h_minus_hhat + 0.25,
        hhat_minus_h=B.hhat_minus_h + 0.25,
        warning="inflated by 0.25 for the invariance check",
    )
    c2 = certify_minimum(E, SearchConfig(), bound=larger)
    same = c2.to_json()["winner"]["point"] == proved37.to_json()["winner"]["point"]
    grew = len(c2.fields_searched) > len(proved37.fields_searched)
    ok = c2.status == PROVED and same and grew
    detail = (
        f"B_E {B.h_minus_hhat:.3f} -> {larger.h_minus_hhat:.3f}: fields {len(proved37.fields_searched)} -> {len(c2.fields_searched)}, "
        f"winner identical {same}; literal global tier needs Delta {max(literal.delta_cutoff.values()):.2g} (out of reach)"
    )
    report(8, ok, detail, capsys)


# 9 -------------------------------------------------------------------------------


def _strip_runtime(text):
    rows = [json.loads(ln) for ln in text.splitlines()]
    for r in rows:
        r["ext"].pop("runtime_ms", None)
    return rows


def test_criterion_9_batch_and_dataset(tmp_path, capsys):
    src = files("minheight") / "data" / "curves25.txt"
    n_in = len(cli.read_curve_lines(src))
    t0 = time.perf_counter()
    out1 = tmp_path / "a.jsonl"
    assert cli.run_batch(src, SearchConfig(), out1, workers=1, summary=open(os.devnull, "w")) == 0
    dt = time.perf_counter() - t0
    out2 = tmp_path / "b.jsonl"
    assert cli.run_batch(src, SearchConfig(workers=2), out2, workers=2, summary=open(os.devnull, "w")) == 0
    r1, r2 = _strip_runtime(out1.read_text()), _strip_runtime(out2.read_text())
    statuses = {}
    for r in r1:
        statuses[r["ext"]["status"]] = statuses.get(r["ext"]["status"], 0) + 1
    stats = conjecture_stats(row for _, row, err in read_rows(out1.read_text()) if not err)
    ok = n_in == 25 and len(r1) == 25 and r1 == r2 and dt < 1800 and "ERROR" not in statuses
    detail = f"25 curves in {dt:.0f} s, statuses {statuses}, identical across runs and worker counts {r1 == r2}, top fields {stats['field_frequency'][:3]}"
    path = os.environ.get("MINHEIGHT_PUBLISHED_DATASET")
    if path:
        rows = [row for _, row, err in read_rows(open(path).read()) if not err]
        top = conjecture_stats(rows)["field_frequency"][:3]
        want = [(1, 2199), (-3, 1610), (-4, 1191)]
        ok = ok and top == want
        detail += f"; published dataset top three {top}"
    else:
        detail += "; published dataset not supplied (set MINHEIGHT_PUBLISHED_DATASET), field-count part skipped"
    report(9, ok, detail, capsys)
