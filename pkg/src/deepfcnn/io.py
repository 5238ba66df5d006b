"""Snapshot serialization: FSN1 binary fields, CSV grids and 8-bit PGM images.

FSN1 layout (little-endian)::

    b"FSN1" | nx: u32 | ny: u32 | h: f64 | nx*ny f64 values, row-major

The file stores only ``h``; a loaded field lives on ``(0, nx*h) x (0, ny*h)``.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .grid import Field, GridSpec

__all__ = [
    "SnapshotFormatError",
    "atomic_write_bytes",
    "atomic_write_text",
    "field_to_bytes",
    "field_from_bytes",
    "save_field",
    "load_field",
    "field_to_csv",
    "save_csv",
    "field_to_pgm",
    "save_pgm",
]

FSN_MAGIC = b"FSN1"
_FSN_HEADER = struct.Struct("<4sIId")


class SnapshotFormatError(ValueError):
    pass


def atomic_write_bytes(path, data: bytes) -> Path:
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def field_to_bytes(field: Field) -> bytes:
    spec = field.spec
    header = _FSN_HEADER.pack(FSN_MAGIC, spec.nx, spec.ny, spec.h)
    return header + field.values.astype("<f8").tobytes(order="C")


def field_from_bytes(data: bytes) -> Field:
    if len(data) < _FSN_HEADER.size:
        raise SnapshotFormatError("truncated FSN1 header")
    magic, nx, ny, h = _FSN_HEADER.unpack_from(data)
    if magic != FSN_MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    expected = _FSN_HEADER.size + 8 * nx * ny
    if len(data) != expected:
        raise SnapshotFormatError(f"expected {expected} bytes, got {len(data)}")
    values = np.frombuffer(data, dtype="<f8", offset=_FSN_HEADER.size).reshape(nx, ny)
    return Field(GridSpec(0.0, nx * h, 0.0, ny * h, nx, ny), values)


def save_field(path, field: Field) -> Path:
    return atomic_write_bytes(path, field_to_bytes(field))


def load_field(path) -> Field:
    return field_from_bytes(Path(path).read_bytes())


def field_to_csv(field) -> str:
    values = np.asarray(field, dtype=np.float64)
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in values)


def save_csv(path, field) -> Path:
    return atomic_write_text(path, field_to_csv(field))


def field_to_pgm(field, fixed_range: bool = False) -> bytes:
    """Binary greyscale PGM; maps [min, max] (or [-1, 1]) linearly onto 0..255.

    Non-finite entries are drawn black.
    """
    values = np.asarray(field, dtype=np.float64)
    finite = np.isfinite(values)
    if fixed_range:
        lo, hi = -1.0, 1.0
    elif finite.any():
        lo, hi = float(values[finite].min()), float(values[finite].max())
    else:
        lo, hi = 0.0, 1.0
    span = hi - lo if hi > lo else 1.0
    scaled = np.where(finite, (values - lo) / span, 0.0)
    pixels = np.rint(np.clip(scaled, 0.0, 1.0) * 255).astype(np.uint8)
    rows, cols = pixels.shape
    return f"P5\n{cols} {rows}\n255\n".encode("ascii") + pixels.tobytes()


def save_pgm(path, field, fixed_range: bool = False) -> Path:
    return atomic_write_bytes(path, field_to_pgm(field, fixed_range))
