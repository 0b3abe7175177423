"""Binary table cache.

Layout (little-endian)::

    b"SAFL" | version 0x01 | kind id u16 | limit u64 | encoding u8 | payload | fnv1a64(payload) u64

Readers reject a wrong magic, version, length or checksum with
``IntegrityError``; nothing is ever returned from a partially valid file.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numba
import numpy as np

from .sieve import _DTYPES, FunctionKind, FunctionTable, kind_from_id

MAGIC = b"SAFL"
VERSION = 1
_HEADER = struct.Struct("<4sBHQB")
_TRAILER = struct.Struct("<Q")

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


class IntegrityError(IOError):
    """Cache file is corrupt, truncated, or of an unknown format."""


@numba.njit(cache=True)
def _fnv1a64(data):
    h = np.uint64(FNV_OFFSET)
    prime = np.uint64(FNV_PRIME)
    for b in data:
        h ^= np.uint64(b)
        h *= prime
    return h


def fnv1a64(data: bytes | np.ndarray) -> int:
    """64-bit FNV-1a hash of a byte string."""
    buf = np.frombuffer(data, dtype=np.uint8) if isinstance(data, (bytes, bytearray, memoryview)) else data.view(np.uint8).ravel()
    return int(_fnv1a64(buf))


def cache_path(kind: FunctionKind, limit: int, directory) -> Path:
    return Path(directory) / f"{kind.name}-{kind.kind_id}-{limit}.safl"


def encode(table: FunctionTable) -> bytes:
    enc = next((e for e, t in _DTYPES.items() if table.values.dtype == np.dtype(t)), None)
    if enc is None:
        raise ValueError(f"cannot encode dtype {table.values.dtype}")
    payload = np.ascontiguousarray(table.values, dtype=table.values.dtype.newbyteorder("<"))
    raw = payload.tobytes()
    return _HEADER.pack(MAGIC, VERSION, table.kind.kind_id, table.limit, enc) + raw + _TRAILER.pack(fnv1a64(raw))


def decode(blob: bytes, kind: FunctionKind | None = None) -> FunctionTable:
    if len(blob) < _HEADER.size + _TRAILER.size:
        raise IntegrityError("file too short for header")
    magic, version, kind_id, limit, enc = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise IntegrityError(f"bad magic {magic!r}")
    if version != VERSION:
        raise IntegrityError(f"unsupported version {version}")
    if enc not in _DTYPES:
        raise IntegrityError(f"unknown cell encoding 0x{enc:02x}")
    dtype = np.dtype(_DTYPES[enc]).newbyteorder("<")
    end = _HEADER.size + limit * dtype.itemsize
    if len(blob) != end + _TRAILER.size:
        raise IntegrityError(f"payload length mismatch: expected {end + _TRAILER.size} bytes, got {len(blob)}")
    raw = blob[_HEADER.size : end]
    (stored,) = _TRAILER.unpack_from(blob, end)
    if fnv1a64(raw) != stored:
        raise IntegrityError("checksum mismatch")
    values = np.frombuffer(raw, dtype=dtype).astype(dtype.newbyteorder("="))
    if kind is None or kind.kind_id != kind_id:
        kind = kind_from_id(kind_id, values[0].item() if limit else None)
    return FunctionTable(kind, limit, values, {"source": "cache"})


def cache_store(table: FunctionTable, directory) -> Path:
    """Write ``table`` atomically into ``directory`` and return the file path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = cache_path(table.kind, table.limit, directory)
    blob = encode(table)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def cache_load(kind: FunctionKind, limit: int, directory) -> FunctionTable:
    """Load the table cached for (kind, limit).

    Raises ``FileNotFoundError`` when no such entry exists and
    ``IntegrityError`` when the file fails validation.
    """
    path = cache_path(kind, limit, directory)
    if not path.exists():
        raise FileNotFoundError(f"no cached table for {kind} up to {limit} in {directory}")
    table = decode(path.read_bytes(), kind)
    if table.limit != limit or table.kind.kind_id != kind.kind_id:
        raise IntegrityError(f"{path} holds {table.kind} up to {table.limit}")
    return table
