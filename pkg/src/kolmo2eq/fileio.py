"""Persistent output formats: binary field snapshots and the trajectory CSV.

Snapshot: one JSON header line (grid dims, box lengths, time, field names,
dtype) followed by the raw row-major little-endian float64 payload of each
physical-space field in header order.  Trajectory CSV: fixed documented
column schema, one row per diagnostics record, full-precision floats so runs
reproduce bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .diagnostics import RECORD_COLUMNS, DiagnosticsRecord

SNAPSHOT_FORMAT = "kolmo2eq-snapshot-v1"
CSV_SCHEMA = ",".join(RECORD_COLUMNS)


class SchemaError(ValueError):
    """File does not carry the expected format marker or column schema."""


def write_snapshot(path, grid, fields: dict, time: float):
    """fields maps name -> physical values on the collocation grid."""
    header = {
        "format": SNAPSHOT_FORMAT,
        "shape": list(grid.shape),
        "lengths": list(grid.lengths),
        "time": float(time),
        "fields": list(fields.keys()),
        "dtype": "<f8",
        "order": "C",
    }
    path = Path(path)
    with path.open("wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        for name, values in fields.items():
            arr = np.ascontiguousarray(np.asarray(values, dtype="<f8"))
            if arr.shape != grid.shape:
                raise ValueError(f"field {name!r} has shape {arr.shape}, expected {grid.shape}")
            fh.write(arr.tobytes())


def read_snapshot(path):
    """Returns (header dict, dict of field arrays)."""
    path = Path(path)
    with path.open("rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise SchemaError(f"{path}: not a snapshot file ({exc})") from exc
        if header.get("format") != SNAPSHOT_FORMAT:
            raise SchemaError(f"{path}: unknown snapshot format {header.get('format')!r}")
        shape = tuple(header["shape"])
        count = int(np.prod(shape))
        fields = {}
        for name in header["fields"]:
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise SchemaError(f"{path}: truncated payload for field {name!r}")
            fields[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return header, fields


def state_snapshot_fields(state):
    v = state.v.physical()
    return {
        "v1": v[0], "v2": v[1], "v3": v[2],
        "omega": state.omega.physical(),
        "b": state.b.physical(),
    }


def write_trajectory_csv(path, records):
    lines = [CSV_SCHEMA]
    for rec in records:
        lines.append(",".join(repr(getattr(rec, c)) for c in RECORD_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path):
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaError(f"{path}: empty trajectory file")
    if lines[0] != CSV_SCHEMA:
        raise SchemaError(
            f"{path}: unknown trajectory schema; expected header {CSV_SCHEMA!r}"
        )
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(RECORD_COLUMNS):
            raise SchemaError(f"{path}:{lineno}: expected {len(RECORD_COLUMNS)} columns")
        try:
            values = [float(p) for p in parts]
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: {exc}") from exc
        records.append(DiagnosticsRecord(*values))
    return records
