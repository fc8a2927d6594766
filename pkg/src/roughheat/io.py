"""File formats: RFC-4180 CSV tables, the ``RHEAT1`` binary format and JSON sidecars.

Binary layout: magic ``b"RHEAT1"``, then little-endian ``u32 n``, ``u32 rows``,
``u32 cols``, followed by ``rows * cols`` little-endian float64 values in row
order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import GridError
from .fractional_field import SheetSample

MAGIC = b"RHEAT1"
_HEADER = struct.Struct("<III")


def fmt(v) -> str:
    """Shortest round-trip float text, at most 17 significant digits."""
    return format(float(v), ".17g")


def write_table_csv(path, corner: str, columns, rows, values) -> Path:
    """Table with a header of column coordinates and one labelled row per entry of ``rows``."""
    path = Path(path)
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow([corner] + [fmt(c) for c in columns])
        for label, row in zip(rows, values):
            w.writerow([fmt(label)] + [fmt(v) for v in row])
    return path


def read_table_csv(path):
    """Inverse of :func:`write_table_csv`: ``(columns, rows, values)``."""
    with open(path, newline="") as fh:
        data = list(csv.reader(fh))
    columns = np.array([float(c) for c in data[0][1:]])
    rows = np.array([float(r[0]) for r in data[1:]])
    values = np.array([[float(v) for v in r[1:]] for r in data[1:]])
    return columns, rows, values


def write_sheet_csv(sheet: SheetSample, path) -> Path:
    return write_table_csv(path, "t", sheet.points, sheet.times, sheet.values)


def read_sheet_csv(path) -> SheetSample:
    _, rows, values = read_table_csv(path)
    n = int(round(np.log2(rows.size - 1)))
    return SheetSample(n, values)


def write_binary(path, n: int, values) -> Path:
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise GridError("binary format stores a 2-D table")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(n, *values.shape))
        fh.write(values.tobytes())
    return path


def read_binary(path) -> tuple[int, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise GridError(f"{path}: not an RHEAT1 file")
    n, rows, cols = _HEADER.unpack_from(raw, len(MAGIC))
    start = len(MAGIC) + _HEADER.size
    body = np.frombuffer(raw, dtype="<f8", offset=start)
    if body.size != rows * cols:
        raise GridError(f"{path}: truncated payload")
    return n, body.reshape(rows, cols).astype(float)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_metadata(path, config: dict, **extra) -> Path:
    """JSON sidecar ``<path>.json`` with the resolved config and the file's content hash."""
    path = Path(path)
    meta = {"file": path.name, "sha256": sha256_file(path), "config": config}
    meta.update(extra)
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return side
