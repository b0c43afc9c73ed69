"""Undirected unweighted graphs, random-graph generators and hop distances.

Graphs are stored in CSR form (``indptr``/``indices``, neighbor lists sorted
by node id) and are immutable once built. Node ids are dense integers in
``[0, N)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from os import PathLike

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .rng import key, make_rng

INF_HOPS = np.iinfo(np.int32).max


class GraphError(ValueError):
    pass


class DisconnectedGraphError(GraphError):
    """Raised where an operation needs a connected graph (take the giant component first)."""


class Graph:
    """Immutable undirected simple graph.

    ``weights`` optionally holds the expected degree of every node (set by the
    power-law generator and consumed by core selection).
    """

    __slots__ = ("n", "indptr", "indices", "weights", "meta")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray,
                 weights: np.ndarray | None = None, meta: dict | None = None):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int32)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if weights is not None:
            weights = np.array(weights, dtype=np.float64)
            if weights.shape != (self.n,):
                raise GraphError("weights must have one entry per node")
            weights.setflags(write=False)
        self.weights = weights
        self.meta = dict(meta or {})

    @classmethod
    def from_edges(cls, n: int, u, v, weights=None, meta=None, check: bool = True) -> "Graph":
        """Build from an edge list; each undirected edge listed once.

        With ``check`` set, self-loops, out-of-range ids and duplicate edges
        raise :class:`GraphError`.
        """
        if n < 0:
            raise GraphError("node count must be non-negative")
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if u.shape != v.shape:
            raise GraphError("edge endpoint arrays differ in length")
        if check and u.size:
            if u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n:
                raise GraphError("edge endpoint out of range")
            if np.any(u == v):
                raise GraphError("self-loop in edge list")
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            code = lo * n + hi
            if np.unique(code).size != code.size:
                raise GraphError("duplicate edge in edge list")
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n, indptr, dst, weights=weights, meta=meta)

    @property
    def edge_count(self) -> int:
        return int(self.indices.size // 2)

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, node: int) -> np.ndarray:
        return self.indices[self.indptr[node]:self.indptr[node + 1]]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge endpoints ``(u, v)`` with ``u < v``, sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        dst = self.indices.astype(np.int64)
        keep = src < dst
        return src[keep], dst[keep]

    def to_scipy(self) -> csr_matrix:
        data = np.ones(self.indices.size, dtype=np.float64)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def subgraph(self, nodes: np.ndarray) -> tuple["Graph", np.ndarray]:
        """Induced subgraph on ``nodes`` re-indexed in increasing original id.

        Returns the subgraph and an old-to-new id map (-1 for dropped nodes).
        """
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        mapping = np.full(self.n, -1, dtype=np.int64)
        mapping[nodes] = np.arange(nodes.size)
        u, v = self.edges()
        keep = (mapping[u] >= 0) & (mapping[v] >= 0)
        w = None if self.weights is None else self.weights[nodes]
        sub = Graph.from_edges(nodes.size, mapping[u[keep]], mapping[v[keep]],
                               weights=w, meta=self.meta, check=False)
        return sub, mapping

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.edge_count})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    __hash__ = None


@dataclass(frozen=True)
class RplgParams:
    """Fan-Lu random power-law graph parameters.

    ``delta_max`` defaults to ``sqrt(n * wbar)``.
    """

    beta: float
    wbar: float
    n: int
    delta_max: float | None = None

    def __post_init__(self):
        if not 2.0 < self.beta < 3.0:
            raise GraphError("beta must lie in (2, 3)")
        if self.wbar <= 1.0:
            raise GraphError("wbar must exceed 1 (no giant component otherwise)")
        if self.n < 2:
            raise GraphError("n must be at least 2")
        if self.delta_max is None:
            object.__setattr__(self, "delta_max", math.sqrt(self.n * self.wbar))
        if self.delta_max < self.wbar:
            raise GraphError("delta_max must be >= wbar")

    @property
    def c(self) -> float:
        b = self.beta
        return (b - 2) / (b - 1) * self.wbar * self.n ** (1 / (b - 1))

    @property
    def i0(self) -> float:
        b = self.beta
        return self.n * (self.wbar * (b - 2) / (self.delta_max * (b - 1))) ** (b - 1)

    def weights(self) -> np.ndarray:
        """Expected degrees ``w_i = c * i**(-1/(beta-1))`` for ``i = i0 .. i0+n-1``."""
        i0 = self.i0
        if not (math.isfinite(i0) and i0 > 0 and math.isfinite(self.c)):
            raise GraphError("degenerate power-law parameters (i0 not finite and positive)")
        i = i0 + np.arange(self.n, dtype=np.float64)
        return self.c * i ** (-1.0 / (self.beta - 1.0))


@dataclass(frozen=True)
class DistanceField:
    source: int
    dist: np.ndarray = field(repr=False)

    def reachable(self) -> np.ndarray:
        return self.dist != INF_HOPS

    def as_float(self) -> np.ndarray:
        out = self.dist.astype(np.float64)
        out[~self.reachable()] = np.inf
        return out


# ---------------------------------------------------------------- generators

def generate_line(n: int) -> Graph:
    """Path graph 0-1-...-(n-1); node 0 is the source end."""
    if n < 2:
        raise GraphError("a line needs at least 2 nodes")
    u = np.arange(n - 1)
    return Graph.from_edges(n, u, u + 1, meta={"model": "line"}, check=False)


def _pair_from_linear(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # linear index k over pairs (i, j), j < i, ordered by i then j
    i = np.floor((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(np.int64)
    base = i * (i - 1) // 2
    over = base > k
    i[over] -= 1
    base = i * (i - 1) // 2
    under = base + i <= k
    i[under] += 1
    base = i * (i - 1) // 2
    return i, k - base


def generate_er(n: int, p: float, seed: int) -> Graph:
    """G(n, p): each of the C(n, 2) pairs joined independently with probability p.

    Uses geometric gap sampling over the pair index, which realizes the same
    distribution as an explicit pair scan.
    """
    if not 0.0 <= p <= 1.0:
        raise GraphError("p must lie in [0, 1]")
    if n < 0:
        raise GraphError("n must be non-negative")
    meta = {"model": "er", "p": p, "seed": seed}
    total = n * (n - 1) // 2
    if p == 0.0 or total == 0:
        return Graph.from_edges(n, [], [], meta=meta, check=False)
    if p == 1.0:
        k = np.arange(total, dtype=np.int64)
    else:
        rng = make_rng(seed, key("er"))
        chunks = []
        pos = -1
        expect = max(16, int(total * p * 1.05 + 10 * math.sqrt(total * p + 1)))
        while pos < total:
            # clamp so the running sum cannot overflow for tiny p
            gaps = np.minimum(rng.geometric(p, size=expect), total + 1)
            idx = pos + np.cumsum(gaps)
            chunks.append(idx[idx < total])
            pos = int(idx[-1])
            expect = max(16, expect // 4)
        k = np.concatenate(chunks)
    i, j = _pair_from_linear(k)
    return Graph.from_edges(n, j, i, meta=meta, check=False)


def generate_rplg(params: RplgParams, seed: int) -> Graph:
    """Fan-Lu random power-law graph with edge probability ``min(1, w_i w_j rho)``.

    The number of clamped pairs (product above 1) is kept in
    ``graph.meta["clamped_pairs"]``. Up to 10^4 nodes every pair is scanned;
    larger graphs use skip sampling over the sorted weights.
    """
    w = params.weights()
    rho = 1.0 / w.sum()
    n = params.n
    rng = make_rng(seed, key("rplg"))
    if n <= 10_000:
        us, vs = [], []
        clamped = 0
        for i in range(n - 1):
            pij = w[i] * w[i + 1:] * rho
            over = pij > 1.0
            if over.any():
                clamped += int(over.sum())
                pij = np.minimum(pij, 1.0)
            hit = np.flatnonzero(rng.random(pij.size) < pij)
            if hit.size:
                us.append(np.full(hit.size, i, dtype=np.int64))
                vs.append(hit + i + 1)
        u = np.concatenate(us) if us else np.zeros(0, np.int64)
        v = np.concatenate(vs) if vs else np.zeros(0, np.int64)
    else:
        u, v, clamped = _rplg_skip(w, rho, rng)
    if clamped:
        warnings.warn(f"{clamped} node pairs had w_i w_j rho > 1 and were clamped", stacklevel=2)
    meta = {"model": "rplg", "beta": params.beta, "wbar": params.wbar,
            "delta_max": params.delta_max, "seed": seed, "clamped_pairs": clamped}
    return Graph.from_edges(n, u, v, weights=w, meta=meta, check=False)


def _rplg_skip(w: np.ndarray, rho: float, rng: np.random.Generator):
    # weights are non-increasing in the node index, so the pair probability
    # along a row is non-increasing and geometric skips with rejection are exact
    n = w.size
    us, vs = [], []
    clamped = 0
    buf = rng.random(4096)
    bi = 0

    def uniform():
        nonlocal buf, bi
        if bi == buf.size:
            buf = rng.random(4096)
            bi = 0
        bi += 1
        return buf[bi - 1]

    for a in range(n - 1):
        b = a + 1
        p = min(w[a] * w[b] * rho, 1.0)
        while b < n and p > 0.0:
            if p < 1.0:
                r = uniform()
                b += int(math.floor(math.log(r) / math.log1p(-p))) if r > 0 else n
            if b < n:
                raw = w[a] * w[b] * rho
                if raw > 1.0:
                    clamped += 1
                q = min(raw, 1.0)
                if uniform() < q / p:
                    us.append(a)
                    vs.append(b)
                p = q
                b += 1
    return np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64), clamped


# ---------------------------------------------------------------- components

def giant_component(g: Graph) -> tuple[Graph, np.ndarray]:
    """Largest connected component, re-indexed, with the old-to-new id map.

    Size ties go to the component holding the smallest original id.
    """
    if g.n == 0:
        raise GraphError("empty graph has no components")
    ncomp, labels = connected_components(g.to_scipy(), directed=False)
    sizes = np.bincount(labels, minlength=ncomp)
    first = np.full(ncomp, g.n, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(g.n))
    best = np.lexsort((first, -sizes))[0]
    return g.subgraph(np.flatnonzero(labels == best))


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    ncomp, _ = connected_components(g.to_scipy(), directed=False)
    return ncomp == 1


def require_connected(g: Graph) -> None:
    if not is_connected(g):
        raise DisconnectedGraphError("graph is disconnected; take giant_component() first")


# ---------------------------------------------------------------- distances

@numba.njit(cache=True)
def _bfs(indptr, indices, source, dist):
    n = dist.size
    for i in range(n):
        dist[i] = 2147483647
    queue = np.empty(n, dtype=np.int32)
    dist[source] = 0
    queue[0] = source
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u] + 1
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] > du:
                dist[v] = du
                queue[tail] = v
                tail += 1
    return dist


def hop_distances(g: Graph, source: int) -> np.ndarray:
    """Raw int32 hop distances from ``source`` (``INF_HOPS`` when unreachable)."""
    if not 0 <= source < g.n:
        raise GraphError(f"source {source} out of range [0, {g.n})")
    return _bfs(g.indptr, g.indices, int(source), np.empty(g.n, dtype=np.int32))


def bfs_distances(g: Graph, source: int) -> DistanceField:
    return DistanceField(int(source), hop_distances(g, source))


def average_distance(g: Graph, sample_sources: int = 64, seed: int = 0,
                     exact_limit: int = 2000) -> float:
    """Mean hop distance over ordered pairs of distinct nodes.

    Exact for ``N <= exact_limit``; otherwise averaged over
    ``max(64, sample_sources)`` seeded BFS sources.
    """
    require_connected(g)
    if g.n < 2:
        raise GraphError("average distance needs at least two nodes")
    if g.n <= exact_limit:
        sources = np.arange(g.n)
    else:
        k = min(g.n, max(64, int(sample_sources)))
        sources = make_rng(seed, key("avgdist")).choice(g.n, size=k, replace=False)
    total = 0
    buf = np.empty(g.n, dtype=np.int32)
    for s in sources:
        total += int(_bfs(g.indptr, g.indices, int(s), buf).sum(dtype=np.int64))
    return total / (len(sources) * (g.n - 1))


# ---------------------------------------------------------------- edge-list IO

def write_edge_list(g: Graph, path: str | PathLike, weights_path: str | PathLike | None = None,
                    comment: str | None = None) -> None:
    """``N M`` header then one ``u v`` line per edge, LF-terminated.

    ``comment`` lines, if given, are written first, each prefixed by ``#``.
    """
    u, v = g.edges()
    lines = [f"# {c}" for c in comment.splitlines()] if comment else []
    lines.append(f"{g.n} {u.size}")
    lines.extend(f"{a} {b}" for a, b in zip(u.tolist(), v.tolist()))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    if weights_path is not None:
        if g.weights is None:
            raise GraphError("graph carries no weights")
        with open(weights_path, "w", newline="\n") as fh:
            fh.write("".join(f"{i} {w!r}\n" for i, w in enumerate(g.weights.tolist())))


def read_edge_list(path: str | PathLike, weights_path: str | PathLike | None = None) -> Graph:
    """Inverse of :func:`write_edge_list`; leading ``#`` comment lines are skipped."""
    with open(path) as fh:
        line = fh.readline()
        while line.startswith("#"):
            line = fh.readline()
        header = line.split()
        if len(header) != 2:
            raise GraphError("edge list must start with 'N M'")
        n, m = int(header[0]), int(header[1])
        data = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m else np.zeros((0, 2), np.int64)
    if data.shape != (m, 2):
        raise GraphError(f"expected {m} edges, found {data.shape[0]}")
    weights = None
    if weights_path is not None:
        wdata = np.loadtxt(weights_path, dtype=np.float64, ndmin=2)
        weights = np.zeros(n)
        idx = wdata[:, 0].astype(np.int64)
        if idx.size != n or np.unique(idx).size != n or idx.min() < 0 or idx.max() >= n:
            raise GraphError("weight sidecar must list every node exactly once")
        weights[idx] = wdata[:, 1]
    return Graph.from_edges(n, data[:, 0], data[:, 1], weights=weights, check=True)
