"""Synthetic byte sources for codec benchmarks.

A source is named by a short spec string:

``markov:K:P[:A]``
    order-K Markov chain over an alphabet of A symbols (default 16, written
    as the bytes ``a``, ``b``, ...). Each length-K context has one preferred
    successor, drawn once from the seed; it follows with probability P,
    otherwise the next symbol is uniform over the alphabet.
``binmarkov:S``
    bit-level chain that keeps the previous bit with probability S.
``iid:P``
    independent bits equal to one with probability P.
``uniform``
    independent uniform bytes.
"""

from __future__ import annotations

import numba
import numpy as np

from ..rng import key, make_rng


@numba.njit(cache=True)
def _markov_bytes(n, order, alpha, table, u, v, base):
    out = np.empty(n, dtype=np.uint8)
    ctx = 0
    span = alpha ** order
    for i in range(n):
        if u[i] < 0.0:
            s = v[i]
        else:
            s = table[ctx] if u[i] < 1.0 else v[i]
        ctx = (ctx * alpha + s) % span
        out[i] = base + s
    return out


def markov_bytes(n: int, order: int, p: float, alphabet: int = 16, seed: int = 0) -> bytes:
    if order < 0 or not 0.0 <= p <= 1.0 or not 2 <= alphabet <= 256:
        raise ValueError("need order >= 0, 0 <= p <= 1, 2 <= alphabet <= 256")
    trng = make_rng(seed, key("markov-table"), order, alphabet)
    table = trng.integers(0, alphabet, alphabet ** order, dtype=np.int64)
    rng = make_rng(seed, key("markov-stream"), order, alphabet)
    r = rng.random(n)
    u = np.where(r < p, 0.5, 2.0)
    v = rng.integers(0, alphabet, n, dtype=np.int64)
    base = ord("a") if alphabet <= 26 else 0
    return _markov_bytes(n, order, alphabet, table, u, v, base).tobytes()


def binary_markov_bytes(n: int, stay: float, seed: int = 0) -> bytes:
    if not 0.0 <= stay <= 1.0:
        raise ValueError("need 0 <= S <= 1")
    rng = make_rng(seed, key("binmarkov"))
    flips = rng.random(n * 8) >= stay
    bits = (np.cumsum(flips) & 1).astype(np.uint8)
    return np.packbits(bits).tobytes()


def iid_bytes(n: int, p1: float, seed: int = 0) -> bytes:
    if not 0.0 <= p1 <= 1.0:
        raise ValueError("need 0 <= P <= 1")
    rng = make_rng(seed, key("iid"))
    bits = (rng.random(n * 8) < p1).astype(np.uint8)
    return np.packbits(bits).tobytes()


def uniform_bytes(n: int, seed: int = 0) -> bytes:
    return make_rng(seed, key("uniform")).integers(0, 256, n, dtype=np.uint8).tobytes()


def synthetic(spec: str, n: int, seed: int = 0) -> bytes:
    """Generate ``n`` bytes from the source named by ``spec``."""
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "markov" and len(parts) in (3, 4):
            alpha = int(parts[3]) if len(parts) == 4 else 16
            return markov_bytes(n, int(parts[1]), float(parts[2]), alpha, seed)
        if kind == "binmarkov" and len(parts) == 2:
            return binary_markov_bytes(n, float(parts[1]), seed)
        if kind == "iid" and len(parts) == 2:
            return iid_bytes(n, float(parts[1]), seed)
        if kind == "uniform" and len(parts) == 1:
            return uniform_bytes(n, seed)
    except ValueError as exc:
        raise ValueError(f"bad source spec {spec!r}: {exc}") from None
    raise ValueError(f"unknown source spec {spec!r}")
