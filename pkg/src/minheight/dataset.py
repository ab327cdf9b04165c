"""Dataset rows in the published four-field schema, plus namespaced extensions.

Canonical storage is JSONL.  CSV is a projection: the four published
columns followed by ``ext.<name>`` columns, quoted with the csv module's
minimal quoting (fields containing commas, quotes or newlines are quoted).

Point serialisation: ``(x : y : 1)`` with coordinates written as
``p/q`` or ``(a+b*sqrt(d))/c``; the point at infinity is ``(0 : 1 : 0)``.
"""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .curve import CurveModel, CurvePoint, SingularCurveError, parse_ainvs
from .qfield import QuadElement, parse_element

PAPER_FIELDS = ("label", "field_disc", "point", "height")

_CURVE_RE = re.compile(r"^\s*(?:(?P<label>[^:\[\]]+?)\s*:\s*)?(?P<ainvs>\[.*\])\s*$")


class CurveInputError(ValueError):
    def __init__(self, msg, position=None):
        self.position = position
        super().__init__(msg if position is None else f"{msg} (at column {position})")


def parse_curve_input(line: str) -> tuple[CurveModel, str | None]:
    """``[a1,a2,a3,a4,a6]``, optionally prefixed ``label:``."""
    m = _CURVE_RE.match(line)
    if not m:
        pos = line.find("[")
        raise CurveInputError(f"expected '[a1,a2,a3,a4,a6]' in {line.strip()!r}", pos + 1 if pos >= 0 else 1)
    label = m.group("label")
    text = m.group("ainvs")
    start = m.start("ainvs")
    try:
        ainvs = parse_ainvs(text)
    except ValueError as exc:
        raise CurveInputError(str(exc), _bad_column(text, start)) from None
    try:
        E = CurveModel.from_ainvs(ainvs, label=label)
    except SingularCurveError as exc:
        raise CurveInputError(str(exc), start + 1) from None
    return E, label


def _bad_column(text, start):
    inner = text[1:-1] if text.endswith("]") else text[1:]
    col = start + 2
    for part in inner.split(","):
        try:
            from fractions import Fraction

            Fraction(part.strip())
        except (ValueError, ZeroDivisionError):
            return col
        col += len(part) + 1
    return start + 1


def format_point(P: CurvePoint) -> str:
    if P.is_infinity:
        return "(0 : 1 : 0)"
    return f"({P.x} : {P.y} : 1)"


def parse_point_text(text: str) -> tuple[QuadElement, QuadElement] | None:
    """Inverse of ``format_point`` (also accepts ``x,y`` and ``(x, y)``); None for infinity."""
    t = text.strip()
    if ":" in t:
        body = t[1:-1] if t.startswith("(") and t.endswith(")") else t
        parts = [p.strip() for p in body.split(":")]
        if len(parts) != 3:
            raise ValueError(f"bad projective point {text!r}")
        if parts[2] == "0":
            return None
        if parts[2] != "1":
            raise ValueError(f"expected z = 1 in {text!r}")
        return parse_element(parts[0]), parse_element(parts[1])
    body = t
    if t.startswith("(") and t.endswith(")") and t.count(",") == 1:
        body = t[1:-1]
    parts = body.split(",")
    if len(parts) != 2:
        raise ValueError(f"bad point {text!r}")
    return parse_element(parts[0]), parse_element(parts[1])


@dataclass
class DatasetRow:
    label: str | None
    field_disc: int | None
    point: str | None
    height: str | None
    ext: dict = field(default_factory=dict)

    def paper_projection(self) -> dict:
        return {k: getattr(self, k) for k in PAPER_FIELDS}

    def to_json(self) -> dict:
        d = self.paper_projection()
        d["ext"] = dict(self.ext)
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d: dict) -> DatasetRow:
        missing = [k for k in PAPER_FIELDS if k not in d]
        if missing:
            raise ValueError(f"missing fields {missing}")
        fd = d["field_disc"]
        return cls(d["label"], None if fd in (None, "") else int(fd), d["point"] or None, d["height"] or None, dict(d.get("ext") or {}))

    def csv_record(self, ext_keys) -> list[str]:
        vals = [self.label, self.field_disc, self.point, self.height] + [self.ext.get(k) for k in ext_keys]
        return ["" if v is None else (json.dumps(v) if isinstance(v, (dict, list)) else str(v)) for v in vals]


EXT_KEYS = (
    "status",
    "degree",
    "B_E_tier",
    "B_E",
    "D_prime",
    "lehmer_point",
    "lehmer_field_disc",
    "lehmer_height_times_degree",
    "lang_ME",
    "min_disc",
    "runtime_ms",
    "error",
)


def write_rows(rows: Iterable[DatasetRow], out, fmt: str = "jsonl"):
    if fmt == "jsonl":
        for r in rows:
            out.write(r.dumps() + "\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(list(PAPER_FIELDS) + [f"ext.{k}" for k in EXT_KEYS])
        for r in rows:
            w.writerow(r.csv_record(EXT_KEYS))
    else:
        raise ValueError(f"unknown format {fmt!r}")


# reading, including third-party layouts ------------------------------------------

_ALIASES = {
    "label": ("label", "cremona_label", "curve", "lmfdb_label", "curve_label"),
    "field_disc": ("field_disc", "disc", "discriminant", "field_discriminant", "d_k", "delta_k", "field"),
    "point": ("point", "coordinates", "pt", "point_coordinates"),
    "height": ("height", "canonical_height", "ht", "min_height"),
}


def _normalise_header(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.strip().lower()).strip("_")


def _map_columns(header):
    norm = [_normalise_header(h) for h in header]
    mapping = {}
    for key, names in _ALIASES.items():
        for i, h in enumerate(norm):
            if h in names:
                mapping[key] = i
                break
    return norm, mapping


def _row_from_mapping(values: dict) -> dict:
    ext = {}
    out = {}
    for k, v in values.items():
        if k.startswith("ext."):
            ext[k[4:]] = v
    for k in PAPER_FIELDS:
        out[k] = values.get(k)
    for k in ("degree", "lang_ME", "min_disc", "status"):
        if ext.get(k) not in (None, ""):
            out[k] = ext[k]
    out["ext"] = ext
    return out


def read_rows(text: str) -> Iterator[tuple[int, dict | None, str | None]]:
    """Yield (line number, row dict or None, error) for JSONL or CSV text (detected by the first character)."""
    stripped = text.lstrip()
    if not stripped:
        return
    if stripped[0] == "{":
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                row = DatasetRow.from_json(d).to_json()
                yield n, _flatten(row), None
            except (ValueError, TypeError, KeyError) as exc:
                yield n, None, str(exc)
        return
    reader = csv.reader(io.StringIO(text))
    header = None
    for rec in reader:
        n = reader.line_num
        if header is None:
            header = rec
            norm, mapping = _map_columns(header)
            if not {"field_disc", "height"} <= mapping.keys():
                yield n, None, f"header lacks field discriminant / height columns: {header}"
                return
            continue
        if not any(s.strip() for s in rec):
            continue
        if len(rec) != len(header):
            yield n, None, f"expected {len(header)} columns, got {len(rec)}"
            continue
        vals = {k: rec[i] for k, i in mapping.items()}
        for i, h in enumerate(header):
            if h.startswith("ext."):
                vals[h] = rec[i]
        try:
            row = _row_from_mapping(vals)
            row = _validate(row)
        except ValueError as exc:
            yield n, None, str(exc)
            continue
        yield n, row, None


def _flatten(row):
    ext = row.get("ext") or {}
    out = dict(row)
    for k in ("degree", "lang_ME", "min_disc", "status"):
        if ext.get(k) not in (None, ""):
            out[k] = ext[k]
    return _validate(out)


def _validate(row):
    for k in PAPER_FIELDS:
        if row.get(k) == "":
            row[k] = None
    fd = row.get("field_disc")
    h = row.get("height")
    if fd not in (None, ""):
        fd = str(fd).strip()
        m = re.fullmatch(r"[+-]?\d+", fd)
        if not m:
            raise ValueError(f"bad field discriminant {fd!r}")
        row["field_disc"] = int(fd)
    if h not in (None, ""):
        float(h)
    return row
