"""EAF1 binary field files.

Layout: magic ``b"EAF1"``, little-endian u32 N1, u32 N2, f64 L, then N1*N2
little-endian f64 nodal values, x1 outer and x2 inner.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grid import ScalarField, make_grid

MAGIC = b"EAF1"
_HEADER = struct.Struct("<4sIId")


def encode(field):
    g = field.grid
    head = _HEADER.pack(MAGIC, g.N1, g.N2, g.L)
    return head + np.ascontiguousarray(field.values, dtype="<f8").tobytes()


def decode(data, grid=None):
    if len(data) < _HEADER.size:
        raise ValidationError("truncated EAF1 header")
    magic, n1, n2, L = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValidationError(f"bad magic {magic!r}, expected {MAGIC!r}")
    body = data[_HEADER.size :]
    if len(body) != 8 * n1 * n2:
        raise ValidationError(f"EAF1 payload has {len(body)} bytes, expected {8 * n1 * n2}")
    if grid is None:
        grid = make_grid(L, n1, n2)
    elif (grid.N1, grid.N2, grid.L) != (n1, n2, L):
        raise ValidationError("EAF1 header does not match the supplied grid")
    values = np.frombuffer(body, dtype="<f8").reshape(n1, n2).astype(float)
    return ScalarField(grid, values)


def write_field(path, field):
    Path(path).write_bytes(encode(field))


def read_field(path, grid=None):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read field file: {exc}") from None
    return decode(data, grid)
