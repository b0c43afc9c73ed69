"""Empirical link gain g(n, m) of a memory-assisted codec.

The first ``m`` bytes of a corpus are the shared memory. The rest is cut
into packets of ``n`` bytes and ``trials`` of them are drawn without
replacement; each is compressed once with the memory and once without it,
every trial starting from the same primed state. ``g`` is the ratio of the
mean compressed sizes, framing included.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..rng import key, make_rng
from .ctw import DEFAULT_DEPTH, CtwCodec
from .lz import LzCodec

CODECS = ("ctw", "lz")


@dataclass(frozen=True)
class GainRecord:
    n: int
    m: int
    codec: str
    trials: int
    mean_bits_with_memory: float
    mean_bits_without_memory: float
    seed: int

    @property
    def g(self) -> float:
        return self.mean_bits_without_memory / self.mean_bits_with_memory

    def header(self) -> list[str]:
        return [f.name for f in fields(self)] + ["g"]

    def row(self) -> list:
        return [repr(v) if isinstance(v, float) else v for v in asdict(self).values()] + [repr(self.g)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        w.writerow(self.row())
        return buf.getvalue()


def make_codec(name: str, memory=b"", depth: int = DEFAULT_DEPTH):
    if name == "ctw":
        return CtwCodec(depth=depth, memory=memory)
    if name == "lz":
        return LzCodec(memory)
    raise ValueError(f"unknown codec {name!r}; choose from {CODECS}")


def _join(corpus) -> bytes:
    if isinstance(corpus, (bytes, bytearray, memoryview)):
        return bytes(corpus)
    return b"".join(bytes(p) for p in corpus)


def trial_offsets(total: int, n: int, m: int, trials: int, seed: int, overlap: bool = False) -> np.ndarray:
    """Start offsets of the sampled packets, in the order they are coded."""
    lo = 0 if overlap else m
    span = (m if overlap else total) - lo
    slots = span // n
    if slots < trials:
        where = "memory" if overlap else "corpus after the memory"
        raise ValueError(f"{where} holds {slots} packets of {n} bytes, {trials} trials requested")
    pick = make_rng(seed, key("gain-trials")).choice(slots, size=trials, replace=False)
    return lo + np.sort(pick) * n


def measure_gain(corpus, codec: str, n: int, m: int, trials: int = 30, seed: int = 0,
                 depth: int = DEFAULT_DEPTH, overlap: bool = False) -> GainRecord:
    """Estimate g(n, m) for ``codec`` on ``corpus``.

    ``overlap=True`` is a diagnostic that draws the packets from inside the
    memory itself, which should make the gain large.
    """
    data = _join(corpus)
    if n < 1 or m < 0 or trials < 1:
        raise ValueError("need n >= 1, m >= 0, trials >= 1")
    if len(data) < m + (0 if overlap else trials * n):
        raise ValueError(f"corpus of {len(data)} bytes is smaller than m + trials*n")
    offsets = trial_offsets(len(data), n, m, trials, seed, overlap)
    primed = make_codec(codec, data[:m], depth)
    fresh = make_codec(codec, b"", depth)
    with_mem = 0
    without = 0
    for off in offsets:
        x = data[off:off + n]
        with_mem += len(primed.encode_detached(x))
        without += len(fresh.encode_detached(x))
    return GainRecord(n=n, m=m, codec=codec, trials=trials,
                      mean_bits_with_memory=8.0 * with_mem / trials,
                      mean_bits_without_memory=8.0 * without / trials, seed=seed)
