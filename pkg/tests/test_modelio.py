import struct
import zlib

import numpy as np
import pytest

from logstamp.errors import CorruptionError, FormatError, InputError
from logstamp.modelio import FORMAT_VERSION, read_container, write_container

MAGIC = b"TEST-MAGIC"


def rewrite_crc(body: bytes) -> bytes:
    body = body[:-4]
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


@pytest.fixture
def saved(tmp_path):
    path = tmp_path / "m.bin"
    arrays = {"a": np.arange(6, dtype=float).reshape(2, 3), "b": np.array([0.5]), "s": np.array(2.0)}
    write_container(path, MAGIC, {"note": "hi"}, arrays)
    return path, arrays


def test_round_trip(saved):
    path, arrays = saved
    header, loaded = read_container(path, MAGIC)
    assert header == {"note": "hi"}
    assert list(loaded) == ["a", "b", "s"]
    for k in arrays:
        assert np.array_equal(loaded[k], arrays[k].astype(np.float32))


def test_version_ahead_is_format_error(saved):
    path, _ = saved
    raw = bytearray(path.read_bytes())
    struct.pack_into("<H", raw, len(MAGIC), FORMAT_VERSION + 1)
    path.write_bytes(rewrite_crc(bytes(raw)))
    with pytest.raises(FormatError, match="version"):
        read_container(path, MAGIC)


def test_flipped_payload_byte_is_corruption(saved):
    path, _ = saved
    raw = bytearray(path.read_bytes())
    raw[-8] ^= 0x01
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptionError):
        read_container(path, MAGIC)


def test_trailing_bytes_with_valid_crc(saved):
    path, _ = saved
    raw = path.read_bytes()
    path.write_bytes(rewrite_crc(raw[:-4] + b"\0\0\0\0" + raw[-4:]))
    with pytest.raises(CorruptionError):
        read_container(path, MAGIC)


def test_wrong_magic_and_missing(tmp_path, saved):
    path, _ = saved
    with pytest.raises(FormatError):
        read_container(path, b"OTHER")
    with pytest.raises(InputError):
        read_container(tmp_path / "nope.bin", MAGIC)
    short = tmp_path / "short.bin"
    short.write_bytes(MAGIC + b"\x01")
    with pytest.raises(CorruptionError):
        read_container(short, MAGIC)
