"""The ".cvt" tensor file format.

Layout: magic ``CVT1``; u8 dtype code (0 = f32, 1 = f64); u8 rank;
rank x u64 little-endian extents; then product(shape) interleaved
(re, im) little-endian values.
"""
from pathlib import Path
from typing import Union
import struct

import numpy as np

from src.errors import FormatError
from src.tensor.ctensor import CTensor

MAGIC = b"CVT1"
DTYPE_CODES = {"f32": 0, "f64": 1}
CODE_DTYPES = {code: name for name, code in DTYPE_CODES.items()}
WIRE_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}
_HEADER = struct.Struct("<4sBB")


def serialize(tensor: CTensor) -> bytes:
    shape = tensor.shape
    header = _HEADER.pack(MAGIC, DTYPE_CODES[tensor.dtype], len(shape))
    extents = struct.pack(f"<{len(shape)}Q", *shape)
    payload = np.empty(2 * tensor.size, dtype=WIRE_DTYPES[tensor.dtype])
    payload[0::2] = tensor.re.reshape(-1)
    payload[1::2] = tensor.im.reshape(-1)
    return header + extents + payload.tobytes()


def deserialize(data: bytes) -> CTensor:
    if len(data) < _HEADER.size:
        raise FormatError("truncated stream: incomplete header")
    magic, code, rank = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if code not in CODE_DTYPES:
        raise FormatError(f"unknown dtype code {code}")
    dtype = CODE_DTYPES[code]

    offset = _HEADER.size
    extents_size = 8 * rank
    if len(data) < offset + extents_size:
        raise FormatError("truncated stream: incomplete extents")
    shape = struct.unpack_from(f"<{rank}Q", data, offset)
    offset += extents_size

    wire = WIRE_DTYPES[dtype]
    count = int(np.prod(shape, dtype=np.int64)) if rank else 1
    expected = 2 * count * wire.itemsize
    remaining = len(data) - offset
    if remaining < expected:
        raise FormatError(
            f"truncated stream: expected {expected} payload bytes, got {remaining}"
        )
    if remaining > expected:
        raise FormatError(f"{remaining - expected} trailing bytes after payload")

    payload = np.frombuffer(data, dtype=wire, count=2 * count, offset=offset)
    re = payload[0::2].reshape(shape)
    im = payload[1::2].reshape(shape)
    return CTensor(re, im, dtype=dtype)


def save(path: Union[str, Path], tensor: CTensor) -> None:
    Path(path).write_bytes(serialize(tensor))


def load(path: Union[str, Path]) -> CTensor:
    return deserialize(Path(path).read_bytes())
