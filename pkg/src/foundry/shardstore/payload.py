"""Self-describing binary container for numeric sample payloads (.bin files).

Layout, little-endian throughout:

    magic   4 bytes  b"FBIN"
    dtype   1 byte   1 = float32, 2 = float64
    rank    1 byte
    shape   rank x uint32
    data    row-major array body

The format is deliberately minimal so any consumer can decode it without a
container library; docs/formats.md is the normative description.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"FBIN"

_DTYPE_TAGS = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_TAG_FOR_DTYPE = {np.dtype("float32"): 1, np.dtype("float64"): 2}


class PayloadError(ValueError):
    pass


def encode_array(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr)
    if arr.dtype not in _TAG_FOR_DTYPE:
        arr = arr.astype(np.float64)
    tag = _TAG_FOR_DTYPE[arr.dtype]
    if arr.ndim > 255:
        raise PayloadError("rank too large")
    head = MAGIC + struct.pack("<BB", tag, arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + np.ascontiguousarray(arr, dtype=_DTYPE_TAGS[tag]).tobytes()


def decode_array(data: bytes) -> np.ndarray:
    if len(data) < 6 or data[:4] != MAGIC:
        raise PayloadError("bad payload magic")
    tag, rank = struct.unpack("<BB", data[4:6])
    if tag not in _DTYPE_TAGS:
        raise PayloadError(f"unknown dtype tag {tag}")
    offset = 6 + 4 * rank
    if len(data) < offset:
        raise PayloadError("truncated payload header")
    shape = struct.unpack(f"<{rank}I", data[6:offset])
    dtype = _DTYPE_TAGS[tag]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(data) - offset != expected:
        raise PayloadError(f"payload body is {len(data) - offset} bytes, expected {expected}")
    return np.frombuffer(data, dtype=dtype, offset=offset).reshape(shape).copy()
