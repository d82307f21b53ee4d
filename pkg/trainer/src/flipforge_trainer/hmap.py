"""Writer/reader for the binary HMAP interchange format.

Layout (little-endian): 4-byte magic `HMAP`, u32 width, u32 height,
u32 format version (1), then width*height float32 values, row-major.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError

_MAGIC = b"HMAP"
_VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_hmap(values: np.ndarray, path: Path | str) -> None:
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {values.shape}")
    height, width = values.shape
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, width, height, _VERSION))
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def read_hmap(path: Path | str) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise DatasetFormatError(f"{path}: truncated HMAP header")
    magic, width, height, version = _HEADER.unpack_from(blob)
    if magic != _MAGIC or version != _VERSION:
        raise DatasetFormatError(f"{path}: not a supported HMAP file")
    payload = blob[_HEADER.size :]
    if len(payload) != width * height * 4:
        raise DatasetFormatError(f"{path}: payload size disagrees with header")
    return np.frombuffer(payload, dtype="<f4").reshape(height, width).copy()
