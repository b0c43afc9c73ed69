"""Binary range coder with 32-bit registers and carry propagation.

Probabilities are 16-bit integers giving P(bit = 0) out of 65536, clamped to
[16, 65520] so no symbol costs more than 12 bits. The coder works only with
integers; callers turn model probabilities into ``p0`` with :func:`quantize`.

Encoder state is an int64 array ``[low, range, cache, cache_size, outpos]``,
decoder state is ``[code, range, inpos, error]``. Keeping state in arrays lets
numba kernels pause and resume a stream.
"""

from __future__ import annotations

import numba
import numpy as np

PROB_BITS = 16
PROB_ONE = 1 << PROB_BITS
PROB_MIN = 16
PROB_MAX = PROB_ONE - PROB_MIN
TOP = 1 << 24
MASK32 = 0xFFFFFFFF


@numba.njit(cache=True)
def quantize(p1):
    """Integer P(0) from a float P(1)."""
    p0 = int((1.0 - p1) * 65536.0 + 0.5)
    if p0 < 16:
        p0 = 16
    elif p0 > 65520:
        p0 = 65520
    return p0


@numba.njit(cache=True)
def _shift_low(st, out):
    low = st[0]
    if low < 0xFF000000 or low > 0xFFFFFFFF:
        carry = low >> 32
        temp = st[2]
        while True:
            # the very first cache byte is always zero and is never written
            if st[5] != 0:
                out[st[4]] = (temp + carry) & 0xFF
                st[4] += 1
            st[5] = 1
            temp = 0xFF
            st[3] -= 1
            if st[3] == 0:
                break
        st[2] = (low >> 24) & 0xFF
    st[3] += 1
    st[0] = (low & 0x00FFFFFF) << 8


@numba.njit(cache=True)
def enc_init(st):
    st[0] = 0
    st[1] = 0xFFFFFFFF
    st[2] = 0
    st[3] = 1
    st[4] = 0
    st[5] = 0


@numba.njit(cache=True)
def enc_bit(st, out, p0, bit):
    rng = st[1]
    bound = (rng >> 16) * p0
    if bit == 0:
        st[1] = bound
    else:
        st[0] += bound
        st[1] = rng - bound
    while st[1] < 16777216:
        st[1] = (st[1] << 8) & 0xFFFFFFFF
        _shift_low(st, out)


@numba.njit(cache=True)
def enc_flush(st, out):
    for _ in range(5):
        _shift_low(st, out)


@numba.njit(cache=True)
def dec_init(st, buf):
    # the implicit leading zero byte plus four stream bytes
    code = 0
    pos = 0
    for _ in range(4):
        b = 0
        if pos < buf.size:
            b = buf[pos]
        else:
            st[3] = 1
        pos += 1
        code = (code << 8) | b
    st[0] = code
    st[1] = 0xFFFFFFFF
    st[2] = pos


@numba.njit(cache=True)
def dec_bit(st, buf, p0):
    rng = st[1]
    code = st[0]
    bound = (rng >> 16) * p0
    if code < bound:
        rng = bound
        bit = 0
    else:
        code -= bound
        rng -= bound
        bit = 1
    while rng < 16777216:
        rng = (rng << 8) & 0xFFFFFFFF
        pos = st[2]
        b = 0
        if pos < buf.size:
            b = buf[pos]
        else:
            st[3] = 1
        st[2] = pos + 1
        code = ((code << 8) | b) & 0xFFFFFFFF
    st[0] = code
    st[1] = rng
    return bit


def new_encoder_state() -> np.ndarray:
    st = np.zeros(6, dtype=np.int64)
    enc_init(st)
    return st


class ArithmeticCoderState:
    """Python-level handle on one encoder or decoder stream.

    Meant for tests and for driving the coder bit by bit from Python; the
    codecs call the numba primitives directly.
    """

    def __init__(self, buf: bytes | None = None):
        self.decoding = buf is not None
        if self.decoding:
            self.buf = np.frombuffer(bytes(buf), dtype=np.uint8)
            self.st = np.zeros(4, dtype=np.int64)
            dec_init(self.st, self.buf)
        else:
            self.st = new_encoder_state()
            self.out = np.zeros(64, dtype=np.uint8)

    @property
    def low(self) -> int:
        return int(self.st[0])

    @property
    def range(self) -> int:
        return int(self.st[1])

    def _reserve(self) -> None:
        # a carry can release the whole pending run of cache bytes at once
        need = int(self.st[4] + self.st[3]) + 16
        if need > self.out.size:
            self.out = np.concatenate([self.out, np.zeros(max(need, self.out.size), dtype=np.uint8)])

    def encode(self, bit: int, p0: int) -> None:
        self._reserve()
        enc_bit(self.st, self.out, int(p0), int(bit))

    def decode(self, p0: int) -> int:
        return int(dec_bit(self.st, self.buf, int(p0)))

    @property
    def overrun(self) -> bool:
        return bool(self.decoding and self.st[3])

    def finish(self) -> bytes:
        self._reserve()
        enc_flush(self.st, self.out)
        return self.out[: self.st[4]].tobytes()
