"""LZ77 with a preset dictionary.

The dictionary plays the role of text already seen: matches may reach back
into it, so data resembling it compresses from the first byte. Parsing is
greedy (longest match at each position over a bounded hash chain).

Token stream, byte aligned. Tokens come in groups of up to eight, each group
preceded by a flag byte whose bit k (least significant first) tells whether
token k is a match (1) or a literal (0):

* literal: the byte itself.
* match: ``distance - 1`` as a W-byte little-endian integer, then a length
  byte ``L = length - min_match``; ``L = 255`` is followed by a varint of
  ``length - min_match - 255``.

W is 2 when the window is at most 65536 bytes and 3 otherwise (up to 16 MiB);
``min_match = W + 2`` so a match is never longer on the wire than the
literals it replaces.
"""

from __future__ import annotations

import numba
import numpy as np

from . import framing

HASH_BITS = 16
DEFAULT_WINDOW = 1 << 16
MAX_WINDOW = 1 << 24
DEFAULT_CHAIN = 256


@numba.njit(cache=True)
def _hash4(a, b, c, d):
    v = (a | (b << 8) | (c << 16) | (d << 24)) * 2654435761
    return (v >> 16) & 0xFFFF


@numba.njit(cache=True)
def _build_chains(buf, head, prev):
    for p in range(buf.size - 3):
        h = _hash4(np.int64(buf[p]), np.int64(buf[p + 1]), np.int64(buf[p + 2]), np.int64(buf[p + 3]))
        prev[p] = head[h]
        head[h] = p


@numba.njit(cache=True)
def _byte(dic, data, q):
    m = dic.size
    if q < m:
        return dic[q]
    return data[q - m]


@numba.njit(cache=True)
def _encode(dic, dhead, dprev, data, window, width, min_match, max_chain, out):
    m = dic.size
    n = data.size
    total = m + n
    lhead = np.full(dhead.size, -1, dtype=np.int64)
    lprev = np.full(max(n, 1), -1, dtype=np.int64)
    o = 0
    flag_pos = -1
    ntok = 8
    i = 0
    while i < n:
        p = m + i
        best_len = 0
        best_dist = 0
        if p + 3 < total:
            h = _hash4(np.int64(_byte(dic, data, p)), np.int64(_byte(dic, data, p + 1)),
                       np.int64(_byte(dic, data, p + 2)), np.int64(_byte(dic, data, p + 3)))
            cand = lhead[h] if lhead[h] >= 0 else dhead[h]
            chain = 0
            limit = n - i
            while cand >= 0 and chain < max_chain:
                dist = p - cand
                if dist > window:
                    break
                if dist > 0:
                    k = 0
                    while k < limit and _byte(dic, data, cand + k) == data[i + k]:
                        k += 1
                    if k > best_len:
                        best_len = k
                        best_dist = dist
                        if k == limit:
                            break
                if cand >= m:
                    cand = lprev[cand - m]
                else:
                    cand = dprev[cand]
                chain += 1
        if ntok == 8:
            flag_pos = o
            out[o] = 0
            o += 1
            ntok = 0
        if best_len >= min_match:
            out[flag_pos] |= 1 << ntok
            dv = best_dist - 1
            for b in range(width):
                out[o] = (dv >> (8 * b)) & 0xFF
                o += 1
            L = best_len - min_match
            if L < 255:
                out[o] = L
                o += 1
            else:
                out[o] = 255
                o += 1
                v = L - 255
                while v >= 0x80:
                    out[o] = (v & 0x7F) | 0x80
                    o += 1
                    v >>= 7
                out[o] = v
                o += 1
            step = best_len
        else:
            out[o] = data[i]
            o += 1
            step = 1
        ntok += 1
        # index every position covered by this token
        for q in range(p, p + step):
            if q + 3 < total:
                h = _hash4(np.int64(_byte(dic, data, q)), np.int64(_byte(dic, data, q + 1)),
                           np.int64(_byte(dic, data, q + 2)), np.int64(_byte(dic, data, q + 3)))
                lprev[q - m] = lhead[h] if lhead[h] >= 0 else dhead[h]
                lhead[h] = q
        i += step
    return o


@numba.njit(cache=True)
def _decoded_length(buf, n, width, min_match):
    """Length the token stream decodes to, stopping once it reaches ``n``; -1 if malformed."""
    i = 0
    o = 0
    size = buf.size
    while o < n:
        if i >= size:
            return -1
        flags = buf[i]
        i += 1
        for t in range(8):
            if o >= n:
                break
            if (flags >> t) & 1:
                if i + width >= size:
                    return -1
                i += width
                L = np.int64(buf[i])
                i += 1
                if L == 255:
                    v = 0
                    shift = 0
                    while True:
                        if i >= size or shift > 56:
                            return -1
                        c = np.int64(buf[i])
                        i += 1
                        v |= (c & 0x7F) << shift
                        if c < 0x80:
                            break
                        shift += 7
                    L = 255 + v
                o += L + min_match
            else:
                if i >= size:
                    return -1
                i += 1
                o += 1
    return o


@numba.njit(cache=True)
def _decode(dic, buf, n, window, width, min_match, out):
    """Returns 0 on success, 1 truncated, 2 bad distance, 3 overflow, 4 trailing bytes."""
    m = dic.size
    i = 0
    o = 0
    size = buf.size
    while o < n:
        if i >= size:
            return 1
        flags = buf[i]
        i += 1
        for t in range(8):
            if o >= n:
                break
            if (flags >> t) & 1:
                if i + width >= size:
                    return 1
                dv = 0
                for b in range(width):
                    dv |= np.int64(buf[i + b]) << (8 * b)
                i += width
                dist = dv + 1
                L = np.int64(buf[i])
                i += 1
                if L == 255:
                    v = 0
                    shift = 0
                    while True:
                        if i >= size or shift > 56:
                            return 1
                        c = np.int64(buf[i])
                        i += 1
                        v |= (c & 0x7F) << shift
                        if c < 0x80:
                            break
                        shift += 7
                    L = 255 + v
                length = L + min_match
                p = m + o
                if dist > p or dist > window:
                    return 2
                if o + length > n:
                    return 3
                src = p - dist
                for k in range(length):
                    q = src + k
                    out[o] = dic[q] if q < m else out[q - m]
                    o += 1
            else:
                if i >= size:
                    return 1
                out[o] = buf[i]
                i += 1
                o += 1
    if i != size:
        return 4
    return 0


class PresetDictionary:
    """Memory bytes shared by encoder and decoder, with a prebuilt match index."""

    def __init__(self, data=b"", window: int | None = None, max_chain: int = DEFAULT_CHAIN):
        self.data = bytes(data)
        m = len(self.data)
        if window is None:
            window = DEFAULT_WINDOW if m <= DEFAULT_WINDOW else min(MAX_WINDOW, 1 << (m - 1).bit_length())
        if window > MAX_WINDOW:
            raise ValueError(f"window {window} exceeds {MAX_WINDOW}")
        if m > window:
            raise ValueError(f"dictionary of {m} bytes does not fit window {window}")
        self.window = int(window)
        self.width = 2 if self.window <= DEFAULT_WINDOW else 3
        self.min_match = self.width + 2
        self.max_chain = int(max_chain)
        self._arr = np.frombuffer(bytearray(self.data), dtype=np.uint8)
        self._head = np.full(1 << HASH_BITS, -1, dtype=np.int64)
        self._prev = np.full(max(m, 1), -1, dtype=np.int64)
        _build_chains(self._arr, self._head, self._prev)

    def __len__(self) -> int:
        return len(self.data)


def lz_encode_with_dict(data, dictionary: PresetDictionary | None = None) -> bytes:
    d = dictionary if dictionary is not None else PresetDictionary()
    arr = np.frombuffer(bytearray(data), dtype=np.uint8)
    out = np.zeros(arr.size + arr.size // 8 + 16, dtype=np.uint8)
    o = _encode(d._arr, d._head, d._prev, arr, d.window, d.width, d.min_match, d.max_chain, out)
    return framing.frame(framing.CODEC_LZ, arr.tobytes(), out[:o].tobytes())


_LZ_ERRORS = {1: "truncated token stream", 2: "match reaches before the dictionary start",
              3: "match runs past the declared length", 4: "trailing bytes after last token"}


def lz_decode_with_dict(blob, dictionary: PresetDictionary | None = None) -> bytes:
    d = dictionary if dictionary is not None else PresetDictionary()
    n, payload, crc = framing.unframe(framing.CODEC_LZ, blob)
    buf = np.frombuffer(bytearray(payload), dtype=np.uint8)
    if n > 0 and buf.size == 0:
        raise framing.CorruptStreamError("empty payload for non-empty data")
    # check the declared length against the tokens before allocating it
    if _decoded_length(buf, n, d.width, d.min_match) != n:
        raise framing.CorruptStreamError("token stream does not match the declared length")
    out = np.zeros(n, dtype=np.uint8)
    err = _decode(d._arr, buf, n, d.window, d.width, d.min_match, out)
    if err:
        raise framing.CorruptStreamError(_LZ_ERRORS[err])
    data = out.tobytes()
    framing.verify(data, crc)
    return data


class LzCodec:
    """LZ codec bound to one preset dictionary; stateless between packets."""

    codec_id = framing.CODEC_LZ
    name = "lz"

    def __init__(self, memory=b"", window: int | None = None):
        self.dictionary = PresetDictionary(memory, window)

    def clone(self) -> "LzCodec":
        return self

    def encode(self, data) -> bytes:
        return lz_encode_with_dict(data, self.dictionary)

    encode_detached = encode

    def decode(self, blob) -> bytes:
        return lz_decode_with_dict(blob, self.dictionary)
