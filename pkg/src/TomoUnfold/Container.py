#  TomoUnfold
#
#  Unfolded sparse recovery for differential SAR tomography
#  Copyright (C) 2024ff TomoUnfold Authors
#
#  This program is free software: you can redistribute it and/or modify
#  it under the terms of the GNU General Public License as published by
#  the Free Software Foundation, either version 3 of the License, or
#  (at your option) any later version.
#
#  This program is distributed in the hope that it will be useful,
#  but WITHOUT ANY WARRANTY; without even the implied warranty of
#  MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#  GNU General Public License for more details.
#
#  You should have received a copy of the GNU General Public License
#  along with this program.  If not, see <https://www.gnu.org/licenses/>.
"""CMX1 complex matrix container.

    offset  size  content
         0     4  magic b"CMX1"
         4     1  version (1)
         5     3  reserved, zero
         8     4  rows, u32 little endian
        12     4  cols, u32 little endian
        16     *  rows * cols * (f64 re, f64 im), row major, little endian
"""

import hashlib
import logging
import struct
from pathlib import Path

import numpy as np

from TomoUnfold.Errors import FileFormatError

logger = logging.getLogger(__name__)

MAGIC = b"CMX1"
VERSION = 1
HEADER = struct.Struct("<4sB3sII")
PAYLOAD_DTYPE = np.dtype("<c16")


def _as_matrix(matrix) -> np.ndarray:
    arr = np.asarray(matrix)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"only 2-D matrices can be stored, got {arr.ndim}-D")
    return arr


def dumps(matrix) -> bytes:
    """vectors are stored as a single column"""
    arr = _as_matrix(matrix)
    rows, cols = arr.shape
    header = HEADER.pack(MAGIC, VERSION, b"\0\0\0", rows, cols)
    return header + np.ascontiguousarray(arr, dtype=PAYLOAD_DTYPE).tobytes()


def loads(data: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(data) < HEADER.size:
        raise FileFormatError(f"{source}: truncated header")
    magic, version, reserved, rows, cols = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FileFormatError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise FileFormatError(f"{source}: unsupported version {version}")
    if reserved != b"\0\0\0":
        raise FileFormatError(f"{source}: reserved bytes not zero")
    expected = rows * cols * PAYLOAD_DTYPE.itemsize
    payload = data[HEADER.size :]
    if len(payload) != expected:
        raise FileFormatError(
            f"{source}: payload has {len(payload)} bytes,"
            f" expected {expected} for {rows}x{cols}"
        )
    return (
        np.frombuffer(payload, dtype=PAYLOAD_DTYPE)
        .reshape(rows, cols)
        .astype(np.complex128)
    )


def save(path: str | Path, matrix) -> None:
    data = dumps(matrix)
    Path(path).write_bytes(data)
    logger.debug("wrote %d bytes to %s", len(data), path)


def load(path: str | Path) -> np.ndarray:
    return loads(Path(path).read_bytes(), str(path))


def load_vector(path: str | Path) -> np.ndarray:
    """single row or column container as 1-D vector"""
    matrix = load(path)
    if 1 not in matrix.shape:
        raise FileFormatError(
            f"{path}: expected a vector, got a {matrix.shape[0]}x"
            f"{matrix.shape[1]} matrix"
        )
    return matrix.reshape(-1)


def matrix_digest(matrix) -> str:
    """SHA-256 over the container serialization"""
    return hashlib.sha256(dumps(matrix)).hexdigest()
