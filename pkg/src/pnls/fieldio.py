"""Field file formats.

CSV: header ``index,x,re,im``, one row per node, floats written with
``repr`` so a write/read cycle is bit-identical.

Binary: 24-byte little-endian header (origin f8, spacing f8, count u8)
followed by ``count`` interleaved (re, im) little-endian f8 pairs.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidFieldError
from .grids import ComplexField, Grid1D

CSV_COLUMNS = ("index", "x", "re", "im")
_HEADER = struct.Struct("<ddQ")


def write_field_csv(path, f: ComplexField) -> None:
    x = f.grid.nodes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for i, (xi, v) in enumerate(zip(x, f.values)):
            w.writerow([i, repr(float(xi)), repr(float(v.real)), repr(float(v.imag))])


def read_field_csv(path) -> ComplexField:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != CSV_COLUMNS:
        raise InvalidFieldError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
    body = rows[1:]
    if len(body) < 2:
        raise InvalidFieldError(f"{path}: need at least two rows")
    x = np.array([float(r[1]) for r in body])
    vals = np.array([complex(float(r[2]), float(r[3])) for r in body])
    h = (x[-1] - x[0]) / (len(x) - 1)
    if not np.allclose(np.diff(x), h, rtol=1e-9, atol=1e-12 * max(1.0, abs(h))):
        raise InvalidFieldError(f"{path}: x column is not uniform")
    return ComplexField(Grid1D(x[0], h, len(x)), vals)


def write_field_bin(path, f: ComplexField) -> None:
    g = f.grid
    data = np.empty(2 * g.count, dtype="<f8")
    data[0::2] = f.values.real
    data[1::2] = f.values.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.origin, g.spacing, g.count))
        fh.write(data.tobytes())


def read_field_bin(path) -> ComplexField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidFieldError(f"{path}: truncated header")
    origin, spacing, count = _HEADER.unpack_from(raw)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != 2 * count:
        raise InvalidFieldError(f"{path}: expected {count} complex samples, found {data.size / 2}")
    return ComplexField(Grid1D(origin, spacing, count), data[0::2] + 1j * data[1::2])


def read_field(path) -> ComplexField:
    path = Path(path)
    if path.suffix.lower() in (".bin", ".dat"):
        return read_field_bin(path)
    return read_field_csv(path)


def write_field(path, f: ComplexField) -> None:
    path = Path(path)
    if path.suffix.lower() in (".bin", ".dat"):
        write_field_bin(path, f)
    else:
        write_field_csv(path, f)
