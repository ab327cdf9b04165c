"""Command-line front end.

    minheight height <curve> <point>
    minheight bound <curve>
    minheight search <curve>
    minheight batch <in> <out>
    minheight stats <dataset>

Exit codes: 0 success, 1 per-command failure, 2 config error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import bounds
from .dataset import (
    CurveInputError,
    DatasetRow,
    format_point,
    parse_curve_input,
    parse_point_text,
    read_rows,
    write_rows,
)
from .heights import canonical_height
from .search import (
    NO_POINT_FOUND,
    ConfigError,
    SearchConfig,
    certify_minimum,
    conjecture_stats,
    to_input_model,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("minheight")


def _row_for(line: str, config: SearchConfig) -> DatasetRow:
    t0 = time.perf_counter()
    label = None
    try:
        E, label = parse_curve_input(line)
        cert = certify_minimum(E, config)
    except Exception as exc:  # captured per row, never fatal
        return DatasetRow(label, None, None, None, {"status": "ERROR", "error": f"{type(exc).__name__}: {exc}"})
    ms = int((time.perf_counter() - t0) * 1000)
    M = E.minimal[0]
    ext = {
        "status": cert.status,
        "min_disc": str(abs(M.discriminant)),
        "lang_ME": None,
        "runtime_ms": ms,
    }
    if cert.bound is not None:
        ext["B_E_tier"] = cert.bound.tier
        ext["B_E"] = cert.B_E
    if cert.status == NO_POINT_FOUND:
        return DatasetRow(label, None, None, None, ext)
    s = cert.smallest
    w = cert.winner
    ME, _ = bounds.lang_invariant(E, s.height)
    ext.update(
        {
            "degree": s.degree,
            "D_prime": cert.D_prime,
            "lang_ME": ME,
            "lehmer_point": format_point(to_input_model(E, w.point)),
            "lehmer_field_disc": w.point.min_field.disc,
            "lehmer_height_times_degree": w.lehmer.decimal(20),
        }
    )
    return DatasetRow(label, s.point.min_field.disc, format_point(to_input_model(E, s.point)), s.height.decimal(20), ext)


def _row_job(args):
    line, config = args
    return _row_for(line, config)


def read_curve_lines(path) -> list[str]:
    lines = Path(path).read_text().splitlines()
    return [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def run_batch(in_path, config: SearchConfig, out_path, fmt: str = "jsonl", workers: int | None = None, summary=None) -> int:
    """One row per curve in input order.  Returns the exit status."""
    summary = summary if summary is not None else sys.stderr
    try:
        lines = read_curve_lines(in_path)
    except OSError as exc:
        print(f"error: cannot read {in_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    workers = workers or config.workers
    inner = replace(config, workers=1) if workers > 1 else config
    jobs = [(ln, inner) for ln in lines]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row_job, jobs))
    else:
        rows = [_row_job(j) for j in jobs]
    try:
        with open(out_path, "w", newline="") as fh:
            write_rows(rows, fh, fmt)
    except OSError as exc:
        print(f"error: cannot write {out_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    counts = {}
    for r in rows:
        st = r.ext.get("status", "ERROR")
        counts[st] = counts.get(st, 0) + 1
    parts = ", ".join(f"{k} {v}" for k, v in sorted(counts.items()))
    print(f"{len(rows)} curves" + (f": {parts}" if parts else ""), file=summary)
    return EXIT_OK


def _stats(path, scatter_path=None, out=None) -> int:
    out = out or sys.stdout
    try:
        text = Path(path).read_text()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    rows = []
    for n, row, err in read_rows(text):
        if err:
            print(f"{path}:{n}: rejected: {err}", file=sys.stderr)
            continue
        rows.append(row)
    s = conjecture_stats(rows)
    scatter = s.pop("scatter")
    print(json.dumps(s, indent=1, default=str), file=out)
    if scatter_path:
        try:
            with open(scatter_path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=["label", "height", "min_disc", "lang_ME", "ratio"], lineterminator="\n")
                w.writeheader()
                w.writerows(scatter)
        except OSError as exc:
            print(f"error: cannot write {scatter_path}: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minheight", description="Smallest canonical heights over fields of degree <= 2")
    ap.add_argument("--config", help="key = value config file")
    ap.add_argument("--precision", type=int, help="working precision in bits")
    ap.add_argument("--workers", type=int, help="worker processes")
    ap.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("height", help="canonical height of a point")
    p.add_argument("curve")
    p.add_argument("point", help="'(x : y : 1)' or 'x,y'")
    p = sub.add_parser("bound", help="height-difference bounds")
    p.add_argument("curve")
    p = sub.add_parser("search", help="certified minimum search")
    p.add_argument("curve")
    p.add_argument("--known-points", help="file of known points, one 'x, y' per line")
    p = sub.add_parser("batch", help="run the search over a file of curves")
    p.add_argument("input")
    p.add_argument("output")
    p = sub.add_parser("stats", help="conjecture statistics over a dataset")
    p.add_argument("dataset")
    p.add_argument("--scatter", help="write per-curve scatter CSV here")
    return ap


def _load_config(args) -> SearchConfig:
    cfg = SearchConfig.from_file(args.config) if args.config else SearchConfig()
    if args.precision is not None:
        cfg = replace(cfg, precision_bits=args.precision)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.cmd == "batch":
            return run_batch(args.input, cfg, args.output, args.format)
        if args.cmd == "stats":
            return _stats(args.dataset, args.scatter)
        E, label = parse_curve_input(args.curve)
        if args.cmd == "height":
            xy = parse_point_text(args.point)
            P = E.infinity() if xy is None else E.point(*xy)
            h = canonical_height(P, precision=max(cfg.precision_bits, 64))
            out = {"curve": E.to_json(), "point": format_point(P), "height": h.to_json(), "halved_x": h.halved().to_json()}
        elif args.cmd == "bound":
            tiers = bounds.height_difference_bounds(E)
            out = {k: v.to_json() for k, v in tiers.items()}
            out["selected"] = bounds.select_bound(E, cfg.bound_tier).tier
        else:
            out = certify_minimum(E, cfg, known_points=args.known_points).to_json()
        print(json.dumps(out, indent=1, sort_keys=True))
        return EXIT_OK
    except (CurveInputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
