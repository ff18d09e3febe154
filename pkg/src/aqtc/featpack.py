"""FEATPACK: minimal binary container for named dense arrays.

Layout (little-endian throughout):

    magic        8 bytes  ASCII "AQTCFT01"
    entry_count  u32
    per entry:
        key_len  u16
        key      key_len bytes, UTF-8
        dtype    u8   (1 = f32, 2 = i8)
        ndim     u8   (1..4)
        dims     ndim x u32
        payload  row-major raw values
    crc32        u32 over every byte following the magic

Arrays are represented in memory as numpy arrays of dtype float32 or
int8.  Round-trips are bit-exact; the trailing CRC32 makes any
post-magic byte flip detectable.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import CorruptionError, FormatError, IoError, ValidationError

MAGIC = b"AQTCFT01"

_DTYPE_CODES = {np.dtype(np.float32): 1, np.dtype(np.int8): 2}
_CODE_DTYPES = {1: np.dtype(np.float32), 2: np.dtype(np.int8)}

MAX_NDIM = 4
MAX_KEY_BYTES = 65535


def _validate_entry(key: str, arr: np.ndarray) -> None:
    if not isinstance(key, str) or not key:
        raise ValidationError(f"featpack key must be a non-empty string, got {key!r}")
    if len(key.encode("utf-8")) > MAX_KEY_BYTES:
        raise ValidationError(f"featpack key exceeds {MAX_KEY_BYTES} UTF-8 bytes")
    if not isinstance(arr, np.ndarray):
        raise ValidationError(f"entry {key!r} is not a numpy array")
    if arr.dtype not in _DTYPE_CODES:
        raise ValidationError(f"entry {key!r} has unsupported dtype {arr.dtype}; use float32 or int8")
    if not 1 <= arr.ndim <= MAX_NDIM:
        raise ValidationError(f"entry {key!r} has ndim {arr.ndim}, expected 1..{MAX_NDIM}")


def write_featpack(entries: dict[str, np.ndarray], path: str | Path) -> None:
    """Serialize *entries* to *path*.

    Keys are written in insertion order, so the same dict always produces
    the same bytes.
    """
    for key, arr in entries.items():
        _validate_entry(key, arr)

    body = bytearray()
    body += struct.pack("<I", len(entries))
    for key, arr in entries.items():
        kb = key.encode("utf-8")
        body += struct.pack("<H", len(kb))
        body += kb
        body += struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim)
        body += struct.pack(f"<{arr.ndim}I", *arr.shape)
        body += np.ascontiguousarray(arr).astype("<f4" if arr.dtype == np.float32 else "<i1", copy=False).tobytes()
    crc = zlib.crc32(bytes(body)) & 0xFFFFFFFF

    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(body)
            fh.write(struct.pack("<I", crc))
    except OSError as exc:
        raise IoError(f"cannot write featpack {path}: {exc}") from exc


def read_featpack(path: str | Path) -> dict[str, np.ndarray]:
    """Read a FEATPACK file, verifying structure and the trailing CRC32."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read featpack {path}: {exc}") from exc

    if len(raw) < len(MAGIC) + 8:
        raise FormatError(f"{path}: truncated featpack ({len(raw)} bytes)")
    if raw[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:8]!r}")

    body = raw[8:-4]
    entries: dict[str, np.ndarray] = {}
    off = 0

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(body):
            raise FormatError(f"{path}: truncated featpack body")
        chunk = body[off : off + n]
        off += n
        return chunk

    (count,) = struct.unpack("<I", take(4))
    for _ in range(count):
        (key_len,) = struct.unpack("<H", take(2))
        try:
            key = take(key_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: key is not valid UTF-8") from exc
        dtype_code, ndim = struct.unpack("<BB", take(2))
        if dtype_code not in _CODE_DTYPES:
            raise FormatError(f"{path}: unknown dtype code {dtype_code}")
        if not 1 <= ndim <= MAX_NDIM:
            raise FormatError(f"{path}: ndim {ndim} out of range")
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        dtype = _CODE_DTYPES[dtype_code]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        payload = take(nbytes)
        if not key:
            raise FormatError(f"{path}: empty key")
        if key in entries:
            raise FormatError(f"{path}: duplicate key {key!r}")
        arr = np.frombuffer(payload, dtype="<f4" if dtype_code == 1 else "<i1").reshape(shape)
        entries[key] = arr.astype(dtype, copy=True)
    if off != len(body):
        raise FormatError(f"{path}: {len(body) - off} trailing bytes after last entry")

    (stored_crc,) = struct.unpack("<I", raw[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise CorruptionError(f"{path}: CRC32 mismatch")
    return entries
