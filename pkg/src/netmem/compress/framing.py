"""Self-delimiting frame around every compressed stream.

Layout::

    magic (1) | codec id (1) | varint original length | varint payload length
    | payload | crc32 of the original bytes (4, little endian)

The original length lets a decoder stop at the declared size and the checksum
catches a wrong priming or dictionary on the decoding side.
"""

from __future__ import annotations

import struct
import zlib

MAGIC = 0xA7

CODEC_CTW = 1
CODEC_LZ = 2
CODEC_TANDEM = 3

CODEC_NAMES = {CODEC_CTW: "ctw", CODEC_LZ: "lz", CODEC_TANDEM: "tandem"}


class CorruptStreamError(ValueError):
    """Raised for truncated, malformed or checksum-failing streams."""


def put_varint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varint must be non-negative")
    while value >= 0x80:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)


def get_varint(buf, pos: int) -> tuple[int, int]:
    value = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise CorruptStreamError("truncated varint")
        b = buf[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if b < 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise CorruptStreamError("varint too long")


def checksum(data) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def frame(codec_id: int, original, payload) -> bytes:
    out = bytearray([MAGIC, codec_id])
    put_varint(out, len(original))
    put_varint(out, len(payload))
    out += payload
    out += struct.pack("<I", checksum(original))
    return bytes(out)


def unframe(codec_id: int, blob) -> tuple[int, memoryview, int]:
    """Return (original length, payload view, expected crc)."""
    blob = memoryview(bytes(blob)) if not isinstance(blob, memoryview) else blob
    if len(blob) < 2 or blob[0] != MAGIC:
        raise CorruptStreamError("bad magic byte")
    if blob[1] != codec_id:
        raise CorruptStreamError(f"codec id {blob[1]} where {codec_id} was expected")
    orig_len, pos = get_varint(blob, 2)
    plen, pos = get_varint(blob, pos)
    if pos + plen + 4 != len(blob):
        raise CorruptStreamError("frame length does not match its header")
    payload = blob[pos:pos + plen]
    (crc,) = struct.unpack("<I", blob[pos + plen:])
    return orig_len, payload, crc


def verify(data, crc: int) -> None:
    if checksum(data) != crc:
        raise CorruptStreamError("checksum mismatch (wrong memory or corrupt stream)")
