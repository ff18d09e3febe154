import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqtc import CorruptionError, FormatError, IoError, ValidationError, read_featpack, write_featpack
from aqtc.featpack import MAGIC


def test_single_entry_byte_layout(tmp_path):
    """The layout fully determines the bytes of a one-entry file."""
    path = tmp_path / "one.fp"
    write_featpack({"a": np.array([1.0, 2.0], dtype=np.float32)}, path)
    body = struct.pack("<I", 1)
    body += struct.pack("<H", 1) + b"a" + struct.pack("<BB", 1, 1) + struct.pack("<I", 2)
    body += np.array([1.0, 2.0], dtype="<f4").tobytes()
    expected = MAGIC + body + struct.pack("<I", zlib.crc32(body))
    raw = path.read_bytes()
    assert raw.startswith(b"AQTCFT01")
    assert raw == expected
    assert len(raw) == 33


def test_empty_pack(tmp_path):
    path = tmp_path / "empty.fp"
    write_featpack({}, path)
    assert len(path.read_bytes()) == 16
    assert read_featpack(path) == {}


def test_round_trip_many_random_arrays(tmp_path):
    rng = np.random.default_rng(99)
    entries = {}
    for i in range(1000):
        ndim = int(rng.integers(1, 5))
        shape = tuple(int(rng.integers(1, 5)) for _ in range(ndim))
        if rng.random() < 0.5:
            entries[f"k/{i}"] = rng.standard_normal(shape).astype(np.float32)
        else:
            entries[f"k/{i}"] = rng.integers(-128, 128, size=shape).astype(np.int8)
    path = tmp_path / "many.fp"
    write_featpack(entries, path)
    back = read_featpack(path)
    assert set(back) == set(entries)
    for key, arr in entries.items():
        assert back[key].dtype == arr.dtype
        assert back[key].shape == arr.shape
        assert arr.tobytes() == back[key].tobytes()


def test_round_trip_preserves_nan_and_inf_bits(tmp_path):
    arr = np.array([np.nan, np.inf, -np.inf, 0.0, -0.0], dtype=np.float32)
    path = tmp_path / "special.fp"
    write_featpack({"x": arr}, path)
    assert read_featpack(path)["x"].tobytes() == arr.tobytes()


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_round_trip_property(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    entries = {}
    for i in range(int(rng.integers(0, 6))):
        shape = tuple(int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 5))))
        arr = rng.standard_normal(shape).astype(np.float32)
        entries[f"e{i}"] = arr
    path = tmp_path_factory.mktemp("fp") / "prop.fp"
    write_featpack(entries, path)
    back = read_featpack(path)
    assert set(back) == set(entries)
    assert all(entries[k].tobytes() == back[k].tobytes() and entries[k].shape == back[k].shape for k in entries)


def test_every_single_byte_flip_detected(tmp_path):
    path = tmp_path / "flip.fp"
    write_featpack(
        {"a": np.arange(6, dtype=np.float32).reshape(2, 3), "s": np.array([1, -1], dtype=np.int8)},
        path,
    )
    raw = bytearray(path.read_bytes())
    for pos in range(len(raw)):
        corrupted = bytearray(raw)
        corrupted[pos] ^= 0xFF
        path.write_bytes(bytes(corrupted))
        with pytest.raises((FormatError, CorruptionError)):
            read_featpack(path)
    path.write_bytes(bytes(raw))
    read_featpack(path)  # pristine file still loads


def test_last_byte_flip_is_corruption(tmp_path):
    path = tmp_path / "tail.fp"
    write_featpack({"a": np.array([3.5], dtype=np.float32)}, path)
    raw = bytearray(path.read_bytes())
    raw[-1] ^= 0x01
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptionError):
        read_featpack(path)


def test_bad_magic(tmp_path):
    path = tmp_path / "magic.fp"
    write_featpack({"a": np.array([1.0], dtype=np.float32)}, path)
    raw = bytearray(path.read_bytes())
    raw[:8] = b"XXXXXXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        read_featpack(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "trunc.fp"
    write_featpack({"a": np.arange(8, dtype=np.float32)}, path)
    raw = path.read_bytes()
    for cut in (4, 12, len(raw) - 6):
        path.write_bytes(raw[:cut])
        with pytest.raises((FormatError, CorruptionError)):
            read_featpack(path)


def test_duplicate_key_rejected(tmp_path):
    entry = struct.pack("<H", 1) + b"a" + struct.pack("<BB", 2, 1) + struct.pack("<I", 1) + b"\x01"
    body = struct.pack("<I", 2) + entry + entry
    path = tmp_path / "dup.fp"
    path.write_bytes(MAGIC + body + struct.pack("<I", zlib.crc32(body)))
    with pytest.raises(FormatError):
        read_featpack(path)


def test_invalid_entries_rejected(tmp_path):
    path = tmp_path / "bad.fp"
    with pytest.raises(ValidationError):
        write_featpack({"x": np.array([1.0], dtype=np.float64)}, path)
    with pytest.raises(ValidationError):
        write_featpack({"x": np.array(1.0, dtype=np.float32)}, path)  # 0-dim
    with pytest.raises(ValidationError):
        write_featpack({"x": np.zeros((1, 1, 1, 1, 1), dtype=np.float32)}, path)
    with pytest.raises(ValidationError):
        write_featpack({"": np.array([1.0], dtype=np.float32)}, path)
    with pytest.raises(ValidationError):
        write_featpack({"k" * 70000: np.array([1.0], dtype=np.float32)}, path)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(IoError):
        read_featpack(tmp_path / "nope.fp")


def test_write_to_unwritable_path_is_io_error(tmp_path):
    with pytest.raises(IoError):
        write_featpack({"a": np.array([1.0], dtype=np.float32)}, tmp_path / "no" / "dir" / "x.fp")
