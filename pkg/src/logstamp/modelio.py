"""Binary container used for encoder and tagger model files.

Layout (all integers little-endian)::

    magic         ASCII, e.g. b"LSTMP-ENC"
    version       u16
    header_len    u32
    header        UTF-8 JSON: config, metadata, and an ordered list of
                  (name, shape) for every parameter array
    arrays        float32 LE, concatenated in header order
    crc32         u32 over every preceding byte
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import CorruptionError, FormatError, InputError

FORMAT_VERSION = 1


def write_container(path: str | Path, magic: bytes, header: dict,
                    arrays: dict[str, np.ndarray]) -> None:
    header = dict(header)
    header["arrays"] = [[name, list(a.shape)] for name, a in arrays.items()]
    hbytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    body = bytearray(magic)
    body += struct.pack("<HI", FORMAT_VERSION, len(hbytes))
    body += hbytes
    for a in arrays.values():
        body += np.ascontiguousarray(a, dtype="<f4").tobytes()
    body += struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(body))


def read_container(path: str | Path, magic: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise InputError(f"model file not found: {path}") from None
    if not blob.startswith(magic):
        raise FormatError(f"{path}: not a {magic.decode()} file (bad magic bytes)")
    pos = len(magic)
    if len(blob) < pos + 6 + 4:
        raise CorruptionError(f"{path}: truncated file")
    version, hlen = struct.unpack_from("<HI", blob, pos)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: format version {version} not supported "
                          f"(this build reads version {FORMAT_VERSION})")
    (stored_crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CorruptionError(f"{path}: checksum mismatch")
    pos += 6
    try:
        header = json.loads(blob[pos:pos + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptionError(f"{path}: unreadable header ({exc})") from None
    pos += hlen
    arrays = {}
    for name, shape in header.pop("arrays"):
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if pos + nbytes > len(blob) - 4:
            raise CorruptionError(f"{path}: truncated parameter block {name!r}")
        arrays[name] = np.frombuffer(blob, dtype="<f4", count=count, offset=pos).reshape(shape).copy()
        pos += nbytes
    if pos != len(blob) - 4:
        raise CorruptionError(f"{path}: {len(blob) - 4 - pos} trailing bytes")
    return header, arrays
