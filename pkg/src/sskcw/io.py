"""Versioned on-disk formats.

CSV files start with one comment line ``# sskcw-<schema> v<version> key=value ...``
followed by a column header.  Floats are written with ``repr`` so a
write/read cycle is exact.  The binary matrix format is a little-endian
``int64`` dimension followed by ``N * N`` row-major ``float64`` values.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .montecarlo import TrialRecord, SummaryStats
from .spectral import Spectrum

CSV_VERSION = 1
JSON_VERSION = 1


class FormatError(ValueError):
    """A file does not match the expected schema or version."""


# ---------------------------------------------------------------- generic CSV

def _header_line(schema: str, meta: dict | None = None) -> str:
    extra = "".join(f" {k}={v}" for k, v in (meta or {}).items())
    return f"# sskcw-{schema} v{CSV_VERSION}{extra}\n"


def _parse_header(line: str, schema: str) -> dict[str, str]:
    parts = line.strip().split()
    if len(parts) < 3 or parts[0] != "#" or parts[1] != f"sskcw-{schema}":
        raise FormatError(f"expected a '# sskcw-{schema}' header, got {line.strip()!r}")
    if parts[2] != f"v{CSV_VERSION}":
        raise FormatError(f"unsupported {schema} version {parts[2]!r}")
    meta = {}
    for kv in parts[3:]:
        k, sep, v = kv.partition("=")
        if not sep:
            raise FormatError(f"malformed header field {kv!r}")
        meta[k] = v
    return meta


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return str(v)


def write_table(path, schema: str, columns: list[str], rows, meta: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_header_line(schema, meta))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_table(path, schema: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        meta = _parse_header(fh.readline(), schema)
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: missing column header")
    return meta, rows[0], rows[1:]


# ---------------------------------------------------------------- trial records

_FIXED = ["index", "seed", "lambda1", "lambda2", "chi"]
_TAIL = ["F_exact", "F_transitional", "F_sd", "rigidity_violation", "excluded", "trace_ok", "error"]


def trial_columns(records: list[TrialRecord]) -> list[str]:
    partial = sorted({t for r in records for t in r.partial_ls})
    full = sorted({t for r in records for t in r.full_ls})
    return _FIXED + [f"partial_ls:{t}" for t in partial] + [f"full_ls:{t}" for t in full] + _TAIL


def write_trials(path, records: list[TrialRecord], meta: dict | None = None) -> None:
    cols = trial_columns(records)
    rows = []
    for r in records:
        row = []
        for c in cols:
            kind, _, tag = c.partition(":")
            row.append(getattr(r, kind).get(tag, math.nan) if tag else getattr(r, c))
        rows.append(row)
    write_table(path, "trials", cols, rows, meta)


def read_trials(path) -> list[TrialRecord]:
    _, cols, rows = read_table(path, "trials")
    missing = set(_FIXED + _TAIL) - set(cols)
    if missing:
        raise FormatError(f"trial CSV lacks columns {sorted(missing)}")
    out = []
    for line, row in enumerate(rows, start=3):
        if len(row) != len(cols):
            raise FormatError(f"line {line}: expected {len(cols)} fields, got {len(row)}")
        d = dict(zip(cols, row))
        rec = TrialRecord(index=int(d["index"]), seed=int(d["seed"]))
        for c in ("lambda1", "lambda2", "chi", "F_exact", "F_transitional", "F_sd"):
            setattr(rec, c, float(d[c]))
        for c in ("rigidity_violation", "excluded", "trace_ok"):
            setattr(rec, c, d[c] == "1")
        rec.error = d["error"]
        for c in cols:
            kind, _, tag = c.partition(":")
            if tag:
                getattr(rec, kind)[tag] = float(d[c])
        out.append(rec)
    return out


# ---------------------------------------------------------------- spectra and matrices

def write_spectrum(path, s: Spectrum) -> None:
    meta = {"N": s.N, "J": repr(float(s.J)), "seed": "none" if s.seed is None else s.seed}
    write_table(path, "spectrum", ["k", "lambda"], ((k + 1, float(v)) for k, v in enumerate(s.values)), meta)


def read_spectrum(path) -> Spectrum:
    meta, cols, rows = read_table(path, "spectrum")
    if cols != ["k", "lambda"]:
        raise FormatError(f"unexpected spectrum columns {cols}")
    values = np.array([float(r[1]) for r in rows])
    if int(meta["N"]) != values.size:
        raise FormatError(f"header says N={meta['N']} but {values.size} rows follow")
    seed = None if meta.get("seed", "none") == "none" else int(meta["seed"])
    return Spectrum(values, float(meta["J"]), seed)


def write_matrix(path, M: np.ndarray) -> None:
    M = np.ascontiguousarray(M, dtype="<f8")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    with open(path, "wb") as fh:
        fh.write(np.int64(M.shape[0]).astype("<i8").tobytes())
        fh.write(M.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise FormatError("matrix file shorter than its header")
    N = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    if N < 0 or len(raw) != 8 + 8 * N * N:
        raise FormatError(f"matrix file size {len(raw)} does not match N={N}")
    return np.frombuffer(raw[8:], dtype="<f8").reshape(N, N).copy()


# ---------------------------------------------------------------- JSON documents

def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value") and isinstance(getattr(o, "value"), str):  # enums
        return o.value
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(doc: dict, schema: str) -> str:
    body = {"schema": f"sskcw-{schema}", "version": JSON_VERSION, **doc}
    # NaN is kept as the JSON extension token; Python's json reads it back
    return json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n"


def loads(text: str, schema: str) -> dict:
    doc = json.loads(text)
    if doc.get("schema") != f"sskcw-{schema}":
        raise FormatError(f"expected schema sskcw-{schema}, got {doc.get('schema')!r}")
    if doc.get("version") != JSON_VERSION:
        raise FormatError(f"unsupported {schema} version {doc.get('version')!r}")
    return {k: v for k, v in doc.items() if k not in ("schema", "version")}


def write_json(path, doc: dict, schema: str) -> None:
    Path(path).write_text(dumps(doc, schema))


def read_json(path, schema: str) -> dict:
    return loads(Path(path).read_text(), schema)


def write_summary(path, st: SummaryStats) -> None:
    write_json(path, st.to_dict(), "summary")


def read_summary(path) -> SummaryStats:
    return SummaryStats.from_dict(read_json(path, "summary"))


def breakdown_rows_json(rows: list[dict]) -> str:
    """One JSON object per line (free-energy breakdowns)."""
    buf = _io.StringIO()
    for r in rows:
        buf.write(json.dumps({"schema": "sskcw-breakdown", "version": JSON_VERSION, **r},
                             sort_keys=True, default=_json_default))
        buf.write("\n")
    return buf.getvalue()


def parse_breakdown_rows(text: str) -> list[dict]:
    out = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        d = json.loads(line)
        if d.get("schema") != "sskcw-breakdown" or d.get("version") != JSON_VERSION:
            raise FormatError(f"line {n}: not a v{JSON_VERSION} breakdown row")
        out.append({k: v for k, v in d.items() if k not in ("schema", "version")})
    return out
