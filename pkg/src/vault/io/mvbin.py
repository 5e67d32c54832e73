"""MVBIN: the bespoke, versioned binary container for point payloads.

Byte layout (all integers little-endian):

    offset  size  field
    0       8     magic ``MVBIN\\x00\\x00\\x01`` (last byte = format version 1)
    8       8     num_items  (u64)
    16      8     num_dims   (u64)
    24      8     reserved   (u64, must be 0)
    32      4*N*D values     (f32, row-major)
    ...           for each dimension: name byte length (u32) + UTF-8 bytes

Total length = 32 + 4*N*D + sum(4 + len(utf8(name))). The format is
bijective on (values, dim names): write/parse round-trips bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from vault.errors import FormatError

MAGIC = b"MVBIN\x00\x00\x01"
_HEADER = struct.Struct("<8sQQQ")


def serialize_mvbin(values, dim_names) -> bytes:
    values = np.ascontiguousarray(np.asarray(values, dtype=np.float32))
    if values.ndim != 2:
        raise FormatError(f"MVBIN stores 2-D matrices, got ndim={values.ndim}")
    n, d = values.shape
    if len(dim_names) != d:
        raise FormatError(f"{len(dim_names)} names for {d} dims")
    parts = [_HEADER.pack(MAGIC, n, d, 0)]
    if values.dtype.byteorder == ">":  # big-endian host
        values = values.byteswap()
    parts.append(values.tobytes(order="C"))
    for name in dim_names:
        encoded = str(name).encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
    return b"".join(parts)


def parse_mvbin(blob: bytes):
    """Parse MVBIN bytes into (float32 matrix, dim names)."""
    if len(blob) < _HEADER.size:
        raise FormatError(f"truncated MVBIN: {len(blob)} bytes, header needs {_HEADER.size}")
    magic, n, d, reserved = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        if magic[:5] == MAGIC[:5]:
            raise FormatError(f"unsupported MVBIN version byte {magic[7]}")
        raise FormatError("bad magic: not an MVBIN file")
    if reserved != 0:
        raise FormatError(f"reserved header field is {reserved}, expected 0")
    body = _HEADER.size + 4 * n * d
    if len(blob) < body:
        raise FormatError(
            f"truncated MVBIN: {len(blob)} bytes, values end at {body}")
    values = np.frombuffer(blob, dtype="<f4", count=n * d, offset=_HEADER.size)
    values = values.reshape(n, d).copy()
    names = []
    cursor = body
    for _ in range(d):
        if cursor + 4 > len(blob):
            raise FormatError("truncated MVBIN: dimension name block cut short")
        (length,) = struct.unpack_from("<I", blob, cursor)
        cursor += 4
        if cursor + length > len(blob):
            raise FormatError("truncated MVBIN: dimension name cut short")
        names.append(blob[cursor:cursor + length].decode("utf-8"))
        cursor += length
    if cursor != len(blob):
        raise FormatError(f"{len(blob) - cursor} trailing bytes after names block")
    return values, names


def write_mvbin(path, values, dim_names) -> None:
    Path(path).write_bytes(serialize_mvbin(values, dim_names))


def read_mvbin(path):
    return parse_mvbin(Path(path).read_bytes())
