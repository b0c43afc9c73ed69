"""Packet de-duplication against a byte store, and de-duplication in tandem
with a statistical codec.

Windows of ``w`` bytes are fingerprinted with two Karp-Rabin hashes modulo
the primes 4294967291 and 4294967279, packed into one 64-bit value. Only
windows whose fingerprint is divisible by ``s`` are kept as anchors, so the
index holds about one entry per ``s`` bytes of store. A packet is scanned
left to right; at each anchor that hits the index the candidate is checked
byte by byte, grown in both directions and replaced by a pointer. Hash hits
are never trusted without that check.

Token stream (``dedup_encode``)::

    varint packet length, then tokens
    0x00 varint n, n raw bytes        literal run
    0x01 varint offset, varint len    copy store[offset:offset+len]

Tandem stream (``tandem_encode``) replaces each literal by ``0x02 varint n``
and appends all literal bytes as one block: a mode byte, then the codec
output, or the raw bytes when the codec would not shrink them. The whole
thing is framed with magic, codec id and checksum.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numba
import numpy as np

from .compress import framing
from .compress.framing import CorruptStreamError, get_varint, put_varint

P1 = 4294967291
P2 = 4294967279
B1 = 257
B2 = 263
DEFAULT_W = 32
DEFAULT_S = 16
MAX_CANDIDATES = 16

TAG_LITERAL = 0x00
TAG_MATCH = 0x01
TAG_LITERAL_REF = 0x02
LIT_RAW = 0x00
LIT_CODED = 0x01


@numba.njit(cache=True)
def _pow_mod(b, e, p):
    r = 1
    for _ in range(e):
        r = (r * b) % p
    return r


@numba.njit(cache=True)
def rolling_fingerprints(buf, w):
    """Fingerprint of every window buf[i:i+w], by rolling update."""
    n = buf.size - w + 1
    if n <= 0:
        return np.zeros(0, dtype=np.uint64)
    out = np.empty(n, dtype=np.uint64)
    top1 = _pow_mod(B1, w - 1, P1)
    top2 = _pow_mod(B2, w - 1, P2)
    h1 = 0
    h2 = 0
    for k in range(w):
        h1 = (h1 * B1 + np.int64(buf[k])) % P1
        h2 = (h2 * B2 + np.int64(buf[k])) % P2
    out[0] = (np.uint64(h1) << np.uint64(32)) | np.uint64(h2)
    for i in range(1, n):
        a = np.int64(buf[i - 1])
        c = np.int64(buf[i + w - 1])
        h1 = ((h1 - a * top1 % P1 + P1) * B1 + c) % P1
        h2 = ((h2 - a * top2 % P2 + P2) * B2 + c) % P2
        out[i] = (np.uint64(h1) << np.uint64(32)) | np.uint64(h2)
    return out


def fingerprint(window) -> int:
    """Direct (non-rolling) fingerprint of one window."""
    h1 = h2 = 0
    for x in bytes(window):
        h1 = (h1 * B1 + x) % P1
        h2 = (h2 * B2 + x) % P2
    return (h1 << 32) | h2


@numba.njit(cache=True)
def _extend(store, size, pkt, c, a, w, lo):
    """Grow a verified match store[c:c+w] == pkt[a:a+w]; returns (back, fwd)
    or (-1, -1) when the w bytes differ."""
    for k in range(w):
        if store[c + k] != pkt[a + k]:
            return -1, -1
    back = 0
    while a - back > lo and c - back > 0 and store[c - back - 1] == pkt[a - back - 1]:
        back += 1
    fwd = 0
    while a + w + fwd < pkt.size and c + w + fwd < size and store[c + w + fwd] == pkt[a + w + fwd]:
        fwd += 1
    return back, fwd


@dataclass(frozen=True)
class Literal:
    data: bytes


@dataclass(frozen=True)
class Match:
    offset: int
    length: int


class FingerprintIndex:
    """Sampled fingerprint index over an append-only byte store.

    ``cap`` bounds the store; appends past it are dropped, there is no
    eviction.
    """

    def __init__(self, memory=b"", w: int = DEFAULT_W, s: int = DEFAULT_S, cap: int | None = None):
        if w < 8 or s < 1:
            raise ValueError("need window w >= 8 and sample rate s >= 1")
        self.w = int(w)
        self.s = int(s)
        memory = bytes(memory)
        self.cap = len(memory) if cap is None else max(int(cap), len(memory))
        self.store = np.zeros(max(self.cap, 1), dtype=np.uint8)
        self.size = 0
        self.table: dict[int, list[int]] = {}
        self.append(memory)

    def __len__(self) -> int:
        return sum(len(v) for v in self.table.values())

    def store_bytes(self) -> bytes:
        return self.store[: self.size].tobytes()

    def append(self, data) -> int:
        """Add bytes to the store (up to the cap) and index new anchors."""
        data = bytes(data)[: self.cap - self.size]
        if not data:
            return 0
        old = self.size
        self.store[old:old + len(data)] = np.frombuffer(data, dtype=np.uint8)
        self.size += len(data)
        # windows that end inside the new bytes
        start = max(0, old - self.w + 1)
        fps = rolling_fingerprints(self.store[start:self.size], self.w)
        hits = np.flatnonzero(fps % np.uint64(self.s) == 0)
        for i in hits.tolist():
            self.table.setdefault(int(fps[i]), []).append(start + i)
        return len(data)

    def lookup(self, fp: int) -> list[int]:
        return self.table.get(fp, [])


def index_build(memory, w: int = DEFAULT_W, s: int = DEFAULT_S, cap: int | None = None) -> FingerprintIndex:
    return FingerprintIndex(memory, w, s, cap)


def dedup_tokens(packet, index: FingerprintIndex) -> list:
    pkt = np.frombuffer(bytearray(packet), dtype=np.uint8)
    w = index.w
    fps = rolling_fingerprints(pkt, w)
    anchors = np.flatnonzero(fps % np.uint64(index.s) == 0).tolist()
    tokens: list = []
    cursor = 0
    for a in anchors:
        if a < cursor:
            continue
        cands = index.lookup(int(fps[a]))
        if not cands:
            continue
        best = None
        # newest candidates first, bounded, longest wins, then earliest store offset
        for c in cands[-MAX_CANDIDATES:]:
            back, fwd = _extend(index.store, index.size, pkt, c, a, w, cursor)
            if back < 0:
                continue
            length = back + w + fwd
            start = c - back
            if best is None or length > best[1] or (length == best[1] and start < best[0]):
                best = (start, length, a - back)
        if best is None:
            continue
        start, length, pstart = best
        if pstart > cursor:
            tokens.append(Literal(pkt[cursor:pstart].tobytes()))
        tokens.append(Match(start, length))
        cursor = pstart + length
    if cursor < pkt.size:
        tokens.append(Literal(pkt[cursor:].tobytes()))
    return tokens


def serialize_tokens(tokens, total: int) -> bytes:
    out = bytearray()
    put_varint(out, total)
    for t in tokens:
        if isinstance(t, Match):
            out.append(TAG_MATCH)
            put_varint(out, t.offset)
            put_varint(out, t.length)
        else:
            out.append(TAG_LITERAL)
            put_varint(out, len(t.data))
            out += t.data
    return bytes(out)


def parse_tokens(blob) -> tuple[int, list]:
    buf = memoryview(bytes(blob))
    total, pos = get_varint(buf, 0)
    tokens = []
    while pos < len(buf):
        tag = buf[pos]
        pos += 1
        if tag == TAG_MATCH:
            off, pos = get_varint(buf, pos)
            ln, pos = get_varint(buf, pos)
            tokens.append(Match(off, ln))
        elif tag == TAG_LITERAL:
            ln, pos = get_varint(buf, pos)
            if pos + ln > len(buf):
                raise CorruptStreamError("literal run cut short")
            tokens.append(Literal(bytes(buf[pos:pos + ln])))
            pos += ln
        else:
            raise CorruptStreamError(f"unknown token tag {tag:#x}")
    return total, tokens


def dedup_encode(packet, index: FingerprintIndex) -> bytes:
    return serialize_tokens(dedup_tokens(packet, index), len(packet))


def _expand(tokens, store: np.ndarray, size: int, total: int) -> bytes:
    out = bytearray()
    for t in tokens:
        if isinstance(t, Match):
            if t.length < 1 or t.offset + t.length > size:
                raise CorruptStreamError("match outside the store")
            out += store[t.offset:t.offset + t.length].tobytes()
        else:
            out += t.data
        if len(out) > total:
            raise CorruptStreamError("tokens overrun the declared length")
    if len(out) != total:
        raise CorruptStreamError("token stream shorter than the declared length")
    return bytes(out)


def dedup_decode(blob, index: FingerprintIndex) -> bytes:
    """Rebuild a packet; only the store of ``index`` is read."""
    total, tokens = parse_tokens(blob)
    return _expand(tokens, index.store, index.size, total)


def tandem_encode(packet, index: FingerprintIndex, codec) -> bytes:
    """De-duplicate, then compress the remaining literal bytes with ``codec``."""
    packet = bytes(packet)
    tokens = dedup_tokens(packet, index)
    head = bytearray()
    put_varint(head, len(packet))
    literals = bytearray()
    for t in tokens:
        if isinstance(t, Match):
            head.append(TAG_MATCH)
            put_varint(head, t.offset)
            put_varint(head, t.length)
        else:
            head.append(TAG_LITERAL_REF)
            put_varint(head, len(t.data))
            literals += t.data
    body = bytearray()
    put_varint(body, len(head))
    body += head
    if literals:
        coded = codec.encode(bytes(literals))
        # incompressible literals are stored raw
        if len(coded) < len(literals):
            body.append(LIT_CODED)
            body += coded
        else:
            body.append(LIT_RAW)
            body += literals
    return framing.frame(framing.CODEC_TANDEM, packet, bytes(body))


def tandem_decode(blob, index: FingerprintIndex, codec) -> bytes:
    n, payload, crc = framing.unframe(framing.CODEC_TANDEM, blob)
    body = payload.tobytes()
    hlen, pos = get_varint(body, 0)
    if pos + hlen > len(body):
        raise CorruptStreamError("token block cut short")
    head = memoryview(body[pos:pos + hlen])
    rest = body[pos + hlen:]
    total, p = get_varint(head, 0)
    refs = []
    lit_total = 0
    while p < len(head):
        tag = head[p]
        p += 1
        if tag == TAG_MATCH:
            off, p = get_varint(head, p)
            ln, p = get_varint(head, p)
            refs.append(Match(off, ln))
        elif tag == TAG_LITERAL_REF:
            ln, p = get_varint(head, p)
            refs.append(ln)
            lit_total += ln
        else:
            raise CorruptStreamError(f"unknown token tag {tag:#x}")
    if not rest:
        literals = b""
    elif rest[0] == LIT_CODED:
        literals = codec.decode(rest[1:])
    elif rest[0] == LIT_RAW:
        literals = rest[1:]
    else:
        raise CorruptStreamError("unknown literal block mode")
    if len(literals) != lit_total:
        raise CorruptStreamError("literal block size disagrees with the tokens")
    tokens = []
    k = 0
    for r in refs:
        if isinstance(r, Match):
            tokens.append(r)
        else:
            tokens.append(Literal(literals[k:k + r]))
            k += r
    if total != n:
        raise CorruptStreamError("token header disagrees with the frame")
    data = _expand(tokens, index.store, index.size, total)
    framing.verify(data, crc)
    return data


class _Detached:
    """Encode-only view of a codec that never advances its state."""

    def __init__(self, codec):
        self.codec = codec

    def encode(self, data) -> bytes:
        return self.codec.encode_detached(data)


@dataclass(frozen=True)
class DedupBenchRow:
    w: int
    s: int
    m: int
    n: int
    packets: int
    bytes_in: int
    dd_bits_per_byte: float
    codec_bits_per_byte: float
    tandem_bits_per_byte: float
    codec: str

    HEADER = ("w", "s", "m", "n", "packets", "bytes_in", "dd_bits_per_byte",
              "codec_bits_per_byte", "tandem_bits_per_byte", "codec")

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.HEADER)
        wr.writerow([repr(v) if isinstance(v, float) else v for v in
                     (getattr(self, h) for h in self.HEADER)])
        return buf.getvalue()


def dedup_bench(corpus, m: int, n: int = 1500, w: int = DEFAULT_W, s: int = DEFAULT_S,
                codec: str = "ctw", cap: int | None = None, depth: int = 16) -> DedupBenchRow:
    """Bits per byte of DD alone, the codec alone and DD followed by the codec.

    The first ``m`` bytes are the shared memory: they fill the DD store and
    prime the codec. The remainder is cut into ``n``-byte packets, coded in
    order. Each packet is coded by a fresh clone of the primed codec, and
    after DD it is appended to the store while the store is below ``cap``.
    """
    from .compress.gain import make_codec

    data = bytes(corpus)
    if len(data) <= m:
        raise ValueError("corpus must be longer than the memory")
    index = FingerprintIndex(data[:m], w, s, cap)
    primed = make_codec(codec, data[:m], depth)
    dd = cc = tt = 0
    count = 0
    for off in range(m, len(data), n):
        pkt = data[off:off + n]
        dd += len(dedup_encode(pkt, index))
        cc += len(primed.encode_detached(pkt))
        tt += len(tandem_encode(pkt, index, _Detached(primed)))
        index.append(pkt)
        count += 1
    total = len(data) - m
    return DedupBenchRow(w=w, s=s, m=m, n=n, packets=count, bytes_in=total,
                         dd_bits_per_byte=8.0 * dd / total, codec_bits_per_byte=8.0 * cc / total,
                         tandem_bits_per_byte=8.0 * tt / total, codec=codec)


def planted_corpus(m: int, test_bytes: int, copies: int = 10, block: int = 100_000,
                   filler: str = "markov:3:0.95", seed: int = 0) -> bytes:
    """Memory of ``m`` filler bytes followed by a test region in which
    ``copies`` blocks of ``block`` bytes, each copied from the memory, sit
    between stretches of fresh filler."""
    from .compress.sources import synthetic
    from .rng import key, make_rng

    if copies * block > test_bytes or block > m:
        raise ValueError("planted blocks do not fit")
    base = synthetic(filler, m + test_bytes, seed)
    memory, fresh = base[:m], base[m:]
    rng = make_rng(seed, key("planted"))
    gap = (test_bytes - copies * block) // (copies + 1)
    parts = []
    pos = 0
    for _ in range(copies):
        parts.append(fresh[pos:pos + gap])
        pos += gap
        src = int(rng.integers(0, m - block + 1))
        parts.append(memory[src:src + block])
    parts.append(fresh[pos:pos + test_bytes - copies * block - copies * gap])
    return memory + b"".join(parts)
