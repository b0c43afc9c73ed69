"""Binary context-tree weighting over a byte stream.

Each byte is coded as eight binary decisions, most significant bit first.
Decision ``j`` of a byte is modelled by its own context tree, chosen by the
``j`` bits of the byte already coded (255 trees in all). Inside a tree the
context is the last ``depth`` bits of the preceding whole bytes, most recent
bit closest to the root. Each node keeps Krichevsky-Trofimov counts and the ratio
``beta = Pe / (Pw(child0) Pw(child1))``; with equal weights of one half the
weighted conditional probability of a node on the context path is::

    Pw(x | s) = (beta_s * Pe(x | s) + Pw(x | child)) / (beta_s + 1)

and after coding ``x`` the ratio is multiplied by ``Pe(x|s) / Pw(x|child)``.
Keeping the ratio instead of block probabilities makes every step O(depth).
The tree is stored sparsely: nodes are created the first time a context is
seen, so a deep tree costs memory proportional to what the data touches.
"""

from __future__ import annotations

import hashlib

import numba
import numpy as np

from . import framing
from .rangecoder import dec_bit, dec_init, enc_bit, enc_flush, new_encoder_state, quantize

DEFAULT_DEPTH = 16
MAX_DEPTH = 24
BETA_MIN = 1e-100
BETA_MAX = 1e100

_PRIME, _ENCODE, _DECODE = 0, 1, 2


@numba.njit(cache=True)
def _run(mode, data, start, stop, depth, child, cnt, beta, meta, est, eout, dbuf, jn, jc, jb, jl):
    """Process bits [start, stop) of ``data``; returns the next bit index.

    ``meta`` holds [n_nodes, history]; nodes 1..255 are the tree roots, one
    per partial-byte prefix. Stops early when fewer than ``depth``
    free nodes remain so the caller can grow the arrays and resume.

    With a non-empty journal (``jn``/``jc``/``jb``, fill levels in ``jl``)
    every node write is logged first so :func:`_rollback` can undo it.
    """
    journal = jn.size > 0
    cap = beta.size
    path = np.empty(depth + 1, dtype=np.int64)
    pes = np.empty(depth + 1, dtype=np.float64)
    pcs = np.empty(depth + 1, dtype=np.float64)
    mask = (1 << depth) - 1
    nn = meta[0]
    hist = meta[1]
    i = start
    while i < stop:
        if nn + depth > cap:
            break
        j = i & 7
        node = (256 | data[i >> 3]) >> (8 - j)
        path[0] = node
        for d in range(depth):
            c = (hist >> d) & 1
            nxt = child[node, c]
            if nxt < 0:
                nxt = nn
                nn += 1
                child[nxt, 0] = -1
                child[nxt, 1] = -1
                cnt[nxt, 0] = 0
                cnt[nxt, 1] = 0
                beta[nxt] = 1.0
                child[node, c] = nxt
                if journal:
                    jc[jl[1]] = 2 * node + c
                    jl[1] += 1
            node = nxt
            path[d + 1] = node
        leaf = path[depth]
        p1 = (cnt[leaf, 1] + 0.5) / (cnt[leaf, 0] + cnt[leaf, 1] + 1.0)
        for d in range(depth - 1, -1, -1):
            nd = path[d]
            pe1 = (cnt[nd, 1] + 0.5) / (cnt[nd, 0] + cnt[nd, 1] + 1.0)
            pes[d] = pe1
            pcs[d] = p1
            b = beta[nd]
            p1 = (b * pe1 + p1) / (b + 1.0)
        if mode == 0:
            x = (data[i >> 3] >> (7 - (i & 7))) & 1
        elif mode == 1:
            x = (data[i >> 3] >> (7 - (i & 7))) & 1
            enc_bit(est, eout, quantize(p1), x)
        else:
            x = dec_bit(est, dbuf, quantize(p1))
            if x:
                data[i >> 3] |= 1 << (7 - (i & 7))
        if journal:
            k = jl[0]
            for d in range(depth + 1):
                nd = path[d]
                jn[k] = nd
                jb[k] = beta[nd]
                k += 1
            jl[0] = k
        for d in range(depth):
            nd = path[d]
            if x:
                r = pes[d] / pcs[d]
            else:
                r = (1.0 - pes[d]) / (1.0 - pcs[d])
            b = beta[nd] * r
            if b < 1e-100:
                b = 1e-100
            elif b > 1e100:
                b = 1e100
            beta[nd] = b
        for d in range(depth + 1):
            cnt[path[d], x] += 1
        i += 1
        if j == 7:
            hist = ((hist << 8) | data[(i - 1) >> 3]) & mask
    meta[0] = nn
    meta[1] = hist
    return i


@numba.njit(cache=True)
def _rollback(child, cnt, beta, jn, jc, jb, jl, bits):
    # counts are undone from the coded bits: each logged path got +1 at bit x
    k = jl[0]
    per = k // bits.size if bits.size else 0
    for i in range(bits.size - 1, -1, -1):
        x = bits[i]
        for d in range(per - 1, -1, -1):
            k -= 1
            nd = jn[k]
            cnt[nd, x] -= 1
            beta[nd] = jb[k]
    for i in range(jl[1] - 1, -1, -1):
        e = jc[i]
        child[e >> 1, e & 1] = -1


class ContextTreeModel:
    """Sparse context tree of fixed depth, in bits."""

    def __init__(self, depth: int = DEFAULT_DEPTH, capacity: int = 4096):
        if not 1 <= depth <= MAX_DEPTH:
            raise ValueError(f"context depth must be in [1, {MAX_DEPTH}], got {depth}")
        self.depth = int(depth)
        cap = max(int(capacity), 256 + depth + 2)
        self.child = np.full((cap, 2), -1, dtype=np.int32)
        self.cnt = np.zeros((cap, 2), dtype=np.int32)
        self.beta = np.ones(cap, dtype=np.float64)
        self.meta = np.array([256, 0], dtype=np.int64)  # roots are nodes 1..255

    @property
    def n_nodes(self) -> int:
        return int(self.meta[0])

    @property
    def max_nodes(self) -> int:
        return 256 + 255 * ((1 << (self.depth + 1)) - 2)

    def _grow(self) -> None:
        cap = self.beta.size
        new = min(max(2 * cap, cap + self.depth + 2), self.max_nodes + self.depth + 2)
        if new <= cap:
            new = cap + self.depth + 2
        child = np.full((new, 2), -1, dtype=np.int32)
        cnt = np.zeros((new, 2), dtype=np.int32)
        beta = np.ones(new, dtype=np.float64)
        n = self.n_nodes
        child[:n] = self.child[:n]
        cnt[:n] = self.cnt[:n]
        beta[:n] = self.beta[:n]
        self.child, self.cnt, self.beta = child, cnt, beta

    def clone(self) -> "ContextTreeModel":
        """Independent copy; cloning is the way to share a primed model."""
        out = ContextTreeModel.__new__(ContextTreeModel)
        out.depth = self.depth
        n = self.n_nodes
        cap = max(n + 4 * self.depth + 8, 64)
        out.child = np.full((cap, 2), -1, dtype=np.int32)
        out.cnt = np.zeros((cap, 2), dtype=np.int32)
        out.beta = np.ones(cap, dtype=np.float64)
        out.child[:n] = self.child[:n]
        out.cnt[:n] = self.cnt[:n]
        out.beta[:n] = self.beta[:n]
        out.meta = self.meta.copy()
        return out

    def state_hash(self) -> str:
        n = self.n_nodes
        h = hashlib.blake2b(digest_size=16)
        h.update(self.meta.tobytes())
        h.update(np.int64(self.depth).tobytes())
        h.update(self.child[:n].tobytes())
        h.update(self.cnt[:n].tobytes())
        h.update(self.beta[:n].tobytes())
        return h.hexdigest()

    def _process(self, mode, data, est=None, eout=None, dbuf=None, journal=None) -> None:
        nbits = data.size * 8
        if journal is None:
            journal = _NO_JOURNAL
        if est is None:
            est = np.zeros(6, dtype=np.int64)
        if eout is None:
            eout = np.zeros(1, dtype=np.uint8)
        if dbuf is None:
            dbuf = np.zeros(1, dtype=np.uint8)
        pos = 0
        while pos < nbits:
            pos = _run(mode, data, pos, nbits, self.depth, self.child, self.cnt,
                       self.beta, self.meta, est, eout, dbuf, *journal)
            if pos < nbits:
                self._grow()


_NO_JOURNAL = (np.zeros(0, dtype=np.int64), np.zeros(1, dtype=np.int64),
               np.zeros(1, dtype=np.float64), np.zeros(2, dtype=np.int64))
# above this many logged node writes a detached encode copies the model instead
JOURNAL_LIMIT = 1 << 23


def _as_array(data) -> np.ndarray:
    # writable copy so every kernel call sees the same array type
    return np.frombuffer(bytearray(data), dtype=np.uint8)


def ctw_prime(model: ContextTreeModel, memory) -> ContextTreeModel:
    """Update ``model`` as though ``memory`` had been coded. Returns the model."""
    arr = _as_array(memory)
    if arr.size:
        model._process(_PRIME, arr)
    return model


def _check_depth(model: ContextTreeModel, depth: int | None) -> None:
    if depth is not None and depth != model.depth:
        raise ValueError(f"model depth {model.depth} differs from requested depth {depth}")


def ctw_encode(data, model: ContextTreeModel, depth: int | None = None) -> bytes:
    """Compress ``data`` into a framed stream, advancing ``model``."""
    _check_depth(model, depth)
    arr = _as_array(data)
    est = new_encoder_state()
    # worst case 12 bits per input bit plus flush
    eout = np.zeros(arr.size * 12 + 16, dtype=np.uint8)
    if arr.size:
        model._process(_ENCODE, arr, est=est, eout=eout)
    enc_flush(est, eout)
    return framing.frame(framing.CODEC_CTW, arr.tobytes(), eout[: est[4]].tobytes())


def ctw_decode(blob, model: ContextTreeModel, depth: int | None = None) -> bytes:
    """Inverse of :func:`ctw_encode`.

    ``model`` must be in the state the encoder started from. It is advanced
    only when decoding succeeds; on error it is left untouched.
    """
    _check_depth(model, depth)
    n, payload, crc = framing.unframe(framing.CODEC_CTW, blob)
    if n > 64 * len(payload) + 64:
        raise framing.CorruptStreamError("declared length impossible for payload size")
    work = model.clone()
    out = np.zeros(n, dtype=np.uint8)
    dbuf = _as_array(payload)
    dst = np.zeros(4, dtype=np.int64)
    dec_init(dst, dbuf)
    if n:
        work._process(_DECODE, out, est=dst, dbuf=dbuf)
    if dst[3]:
        raise framing.CorruptStreamError("arithmetic decoder ran past the payload")
    data = out.tobytes()
    framing.verify(data, crc)
    model.child, model.cnt, model.beta, model.meta = work.child, work.cnt, work.beta, work.meta
    return data


def ctw_encode_detached(data, model: ContextTreeModel) -> bytes:
    """Like :func:`ctw_encode` but leaves ``model`` as it was.

    Equivalent to encoding with a fresh clone. Short inputs are coded in
    place with a write journal that is rolled back, so the cost does not
    depend on the size of the model.
    """
    arr = _as_array(data)
    nbits = arr.size * 8
    entries = nbits * (model.depth + 1)
    if entries > JOURNAL_LIMIT:
        return ctw_encode(arr, model.clone())
    journal = (np.empty(entries, dtype=np.int64), np.empty(nbits * model.depth + 1, dtype=np.int64),
               np.empty(entries, dtype=np.float64), np.zeros(2, dtype=np.int64))
    saved = model.meta.copy()
    est = new_encoder_state()
    eout = np.zeros(arr.size * 12 + 16, dtype=np.uint8)
    if arr.size:
        model._process(_ENCODE, arr, est=est, eout=eout, journal=journal)
    enc_flush(est, eout)
    bits = np.unpackbits(arr)
    _rollback(model.child, model.cnt, model.beta, *journal, bits)
    model.meta[:] = saved
    return framing.frame(framing.CODEC_CTW, arr.tobytes(), eout[: est[4]].tobytes())


def ctw_code_length(data, model: ContextTreeModel) -> int:
    """Framed size in bytes; ``model`` is left unchanged."""
    return len(ctw_encode_detached(data, model))


class CtwCodec:
    """Stateful CTW codec; encoder and decoder sides each own one instance."""

    codec_id = framing.CODEC_CTW
    name = "ctw"

    def __init__(self, depth: int = DEFAULT_DEPTH, memory=b"", model: ContextTreeModel | None = None):
        self.model = model if model is not None else ctw_prime(ContextTreeModel(depth), memory)

    def clone(self) -> "CtwCodec":
        return CtwCodec(model=self.model.clone())

    def encode(self, data) -> bytes:
        return ctw_encode(data, self.model)

    def encode_detached(self, data) -> bytes:
        """Encode as a fresh clone would, without advancing this codec."""
        return ctw_encode_detached(data, self.model)

    def decode(self, blob) -> bytes:
        return ctw_decode(blob, self.model)
