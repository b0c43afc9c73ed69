"""Memory-aware routing and bit-hop flow accounting.

A flow from source S to destination D may be compressed on the segment from
S to some memory node mu, where the shared memory lets it shrink by the link
gain g; from mu onward it travels uncompressed. Its cost in bit-hops per unit
flow (the *effective distance*) is::

    d_hat(S, D) = min( d(S, D), min_mu d(S, mu) / g + d(mu, D) )

The network compression gain is the ratio of total flow without memories to
total flow with them, summed over ordered (S, D) pairs.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass

import numba
import numpy as np

from .graph import INF_HOPS, Graph, GraphError, _bfs, require_connected
from .rng import key, make_rng

EPS = 1e-9
EXACT_SOURCE_LIMIT = 2000
DEFAULT_SOURCE_SAMPLE = 256


@dataclass(frozen=True)
class MemoryDeployment:
    memory_nodes: tuple[int, ...]
    g: float

    def __init__(self, memory_nodes, g: float):
        nodes = tuple(int(x) for x in memory_nodes)
        if len(set(nodes)) != len(nodes):
            raise GraphError("memory nodes must be distinct")
        if not g >= 1.0:
            raise GraphError("memory-assisted gain g must be >= 1")
        object.__setattr__(self, "memory_nodes", nodes)
        object.__setattr__(self, "g", float(g))

    @property
    def M(self) -> int:
        return len(self.memory_nodes)

    def validate(self, graph: Graph) -> None:
        for m in self.memory_nodes:
            if not 0 <= m < graph.n:
                raise GraphError(f"memory node {m} out of range [0, {graph.n})")

    def array(self) -> np.ndarray:
        return np.array(self.memory_nodes, dtype=np.int64)


@dataclass
class EffectiveDistanceTable:
    source: int
    d_hat: np.ndarray
    chosen_memory: np.ndarray  # -1 where the plain shortest path is used
    plain_distance: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source", "dest", "d", "d_hat", "memory"])
        for dest in range(self.d_hat.size):
            if dest == self.source:
                continue
            m = int(self.chosen_memory[dest])
            w.writerow([self.source, dest, int(self.plain_distance[dest]),
                        repr(float(self.d_hat[dest])), "" if m < 0 else m])
        return buf.getvalue()


@dataclass
class FlowReport:
    """Total bit-hop flow with and without memories.

    When the split is known, ``K`` counts compressed bit-hops before the
    division by g and ``B`` plain bit-hops, so F = K/g + B and G is formed
    from integers without accumulated rounding.
    """

    F0: float
    F: float
    g: float = math.nan
    M: int = 0
    N: int = 0
    seed: int | None = None
    K: int | None = None
    B: int | None = None

    @classmethod
    def from_split(cls, f0: int, K: int, B: int, g: float, **kw) -> "FlowReport":
        return cls(F0=float(f0), F=K / g + B, g=g, K=int(K), B=int(B), **kw)

    @property
    def G(self) -> float:
        if self.K is not None:
            den = self.K + self.g * self.B
            return self.g * self.F0 / den if den > 0 else 1.0
        return self.F0 / self.F if self.F > 0 else 1.0

    HEADER = ("F0", "F", "G", "g", "M", "N", "seed")

    def row(self) -> list:
        return [repr(float(self.F0)), repr(float(self.F)), repr(self.G), repr(self.g),
                self.M, self.N, "" if self.seed is None else self.seed]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        w.writerow(self.row())
        return buf.getvalue()


# ---------------------------------------------------------------- kernels

@numba.njit(cache=True)
def _heap_push(hk, hv, size, k, v):
    i = size
    hk[i] = k
    hv[i] = v
    while i > 0:
        p = (i - 1) >> 1
        if hk[p] <= hk[i]:
            break
        hk[p], hk[i] = hk[i], hk[p]
        hv[p], hv[i] = hv[i], hv[p]
        i = p
    return size + 1


@numba.njit(cache=True)
def _heap_pop(hk, hv, size):
    k = hk[0]
    v = hv[0]
    size -= 1
    hk[0] = hk[size]
    hv[0] = hv[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        if l + 1 < size and hk[l + 1] < hk[l]:
            c = l + 1
        if hk[i] <= hk[c]:
            break
        hk[c], hk[i] = hk[i], hk[c]
        hv[c], hv[i] = hv[i], hv[c]
        i = c
    return k, v, size


@numba.njit(cache=True)
def _offset_dijkstra(indptr, indices, mem, offsets, cost, hops, origin, hk, hv):
    """cost[v] = min_mu offsets[mu] + d(mu, v), unit edges.

    ``origin``/``hops`` carry the minimizing memory, ties resolved toward the
    smaller (d(mu, v), mu). Costs are formed as ``offset + hops`` directly so
    they equal the closed form bit for bit.
    """
    n = cost.size
    off = np.full(n, np.inf)
    for i in range(n):
        cost[i] = np.inf
        hops[i] = 2147483647
        origin[i] = -1
    size = 0
    for j in range(mem.size):
        m = mem[j]
        c = offsets[j]
        off[m] = c
        if c < cost[m] - 1e-9 or (abs(c - cost[m]) <= 1e-9 and m < origin[m]):
            cost[m] = c
            hops[m] = 0
            origin[m] = m
            size = _heap_push(hk, hv, size, c, m)
    done = np.zeros(n, dtype=np.bool_)
    while size > 0:
        c, u, size = _heap_pop(hk, hv, size)
        if done[u] or c > cost[u] + 1e-12:
            continue
        done[u] = True
        nh = hops[u] + 1
        ou = origin[u]
        nc = off[ou] + nh
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if done[v]:
                continue
            if nc < cost[v] - 1e-9:
                cost[v] = nc
                hops[v] = nh
                origin[v] = ou
                size = _heap_push(hk, hv, size, nc, v)
            elif nc <= cost[v] + 1e-9:
                if nh < hops[v] or (nh == hops[v] and ou < origin[v]):
                    cost[v] = nc
                    hops[v] = nh
                    origin[v] = ou
    return cost


@numba.njit(cache=True)
def _flows_optimal(indptr, indices, mem, g, sources):
    n = indptr.size - 1
    dist = np.empty(n, dtype=np.int32)
    cost = np.empty(n, dtype=np.float64)
    hops = np.empty(n, dtype=np.int32)
    origin = np.empty(n, dtype=np.int64)
    offsets = np.empty(mem.size, dtype=np.float64)
    cap = indices.size + mem.size + 1
    hk = np.empty(cap, dtype=np.float64)
    hv = np.empty(cap, dtype=np.int64)
    # flow split into compressed bit-hops K (before dividing by g) and plain B
    f0 = 0
    K = 0
    B = 0
    for s in sources:
        _bfs(indptr, indices, s, dist)
        for i in range(n):
            f0 += dist[i]
        if mem.size == 0:
            continue
        for j in range(mem.size):
            offsets[j] = dist[mem[j]] / g
        _offset_dijkstra(indptr, indices, mem, offsets, cost, hops, origin, hk, hv)
        for i in range(n):
            if cost[i] < dist[i]:
                K += dist[origin[i]]
                B += hops[i]
            else:
                B += dist[i]
    if mem.size == 0:
        B = f0
    return f0, K, B


@numba.njit(cache=True)
def _flows_naive(indptr, indices, is_mem, g, sources):
    n = indptr.size - 1
    dist = np.empty(n, dtype=np.int32)
    queue = np.empty(n, dtype=np.int32)
    first = np.empty(n, dtype=np.int32)
    f0 = 0
    K = 0
    B = 0
    for s in sources:
        for i in range(n):
            dist[i] = 2147483647
        dist[s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if dist[v] == 2147483647:
                    dist[v] = dist[u] + 1
                    queue[tail] = v
                    tail += 1
        # fixed path: parent = smallest-id neighbor one hop closer to s;
        # the flow is decoded at the first memory met after leaving s
        first[s] = -1
        for qi in range(1, tail):
            v = queue[qi]
            parent = -1
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if dist[u] == dist[v] - 1:
                    parent = u
                    break
            if first[parent] >= 0:
                first[v] = first[parent]
            elif is_mem[v]:
                first[v] = dist[v]
            else:
                first[v] = -1
        for qi in range(1, tail):
            v = queue[qi]
            d = dist[v]
            f0 += d
            x = first[v]
            if x >= 0:
                K += x
                B += d - x
            else:
                B += d
    return f0, K, B


# ---------------------------------------------------------------- operations

def _check_source(graph: Graph, node: int, what: str = "source") -> int:
    if not 0 <= int(node) < graph.n:
        raise GraphError(f"{what} {node} out of range [0, {graph.n})")
    return int(node)


def effective_distances(graph: Graph, mem: MemoryDeployment, source: int) -> EffectiveDistanceTable:
    """Effective distance from ``source`` to every node, with the memory used.

    A memory is recorded only when it strictly improves on the plain
    shortest path; among equally good memories the one nearer to the
    destination wins, then the smaller node id.
    """
    source = _check_source(graph, source)
    mem.validate(graph)
    require_connected(graph)
    dist = _bfs(graph.indptr, graph.indices, source, np.empty(graph.n, dtype=np.int32))
    plain = dist.astype(np.float64)
    chosen = np.full(graph.n, -1, dtype=np.int64)
    if mem.M == 0:
        return EffectiveDistanceTable(source, plain.copy(), chosen, dist.astype(np.int64))
    m = mem.array()
    cost = np.empty(graph.n)
    hops = np.empty(graph.n, dtype=np.int32)
    origin = np.empty(graph.n, dtype=np.int64)
    cap = graph.indices.size + m.size + 1
    _offset_dijkstra(graph.indptr, graph.indices, m, dist[m] / mem.g, cost, hops, origin,
                     np.empty(cap), np.empty(cap, dtype=np.int64))
    better = cost < plain - EPS
    d_hat = np.where(better, cost, plain)
    chosen[better] = origin[better]
    return EffectiveDistanceTable(source, d_hat, chosen, dist.astype(np.int64))


def modified_dijkstra(graph: Graph, mem: MemoryDeployment, destination: int,
                      return_marks: bool = False):
    """Effective cost from every node to ``destination``, grown outward from it.

    Node-marking Dijkstra: the closest unsettled node nu is settled; if nu is
    unmarked its neighbors v are relaxed with ``1 + cost(nu)``, if marked with
    ``1/g + cost(nu)`` and v becomes marked. Memories start marked. Each node
    keeps its best unmarked (plain) and best marked (compressed) cost
    separately, so a cheaper plain route to v never erases the compressed
    route through v that a farther node may need. Marks are read off the
    final labels: a node is marked when its compressed label wins or it is a
    memory.
    """
    dest = _check_source(graph, destination, "destination")
    mem.validate(graph)
    n, g = graph.n, mem.g
    indptr, indices = graph.indptr, graph.indices
    is_mem = np.zeros(n, dtype=bool)
    is_mem[list(mem.memory_nodes)] = True
    plain = [math.inf] * n
    # compressed label of v: (k, b) = k hops compressed then b plain hops
    comp = [math.inf] * n
    comp_kb = [(0, 0)] * n
    settled = [[False] * n, [False] * n]
    plain[dest] = 0.0
    heap = [(0.0, 0, dest)]  # (cost, marked, node)
    while heap:
        c, marked, nu = heapq.heappop(heap)
        if settled[marked][nu]:
            continue
        settled[marked][nu] = True
        if not marked:
            if is_mem[nu] and c < comp[nu]:
                # a memory decodes here: compressed arrivals continue at its plain cost
                comp[nu] = c
                comp_kb[nu] = (0, int(c))
                heapq.heappush(heap, (c, 1, nu))
            nc = c + 1.0
            for v in indices[indptr[nu]:indptr[nu + 1]].tolist():
                if nc < plain[v]:
                    plain[v] = nc
                    heapq.heappush(heap, (nc, 0, v))
        else:
            k, b = comp_kb[nu]
            k += 1
            nc = k / g + b
            for v in indices[indptr[nu]:indptr[nu + 1]].tolist():
                if nc < comp[v]:
                    comp[v] = nc
                    comp_kb[v] = (k, b)
                    heapq.heappush(heap, (nc, 1, v))
    if math.isinf(max(plain)):
        raise GraphError("graph is disconnected; take giant_component() first")
    plain_a = np.array(plain)
    comp_a = np.array(comp)
    cost = np.minimum(plain_a, comp_a)
    if not return_marks:
        return cost
    marks = (comp_a < plain_a - EPS) | is_mem
    return cost, marks


def total_flow(graph: Graph, mem: MemoryDeployment, source: int) -> FlowReport:
    """Single-source flow with unit demand to every other node."""
    t = effective_distances(graph, mem, source)
    return FlowReport(F0=float(t.plain_distance.sum()), F=float(t.d_hat.sum()),
                      g=mem.g, M=mem.M, N=graph.n)


def resolve_sources(graph: Graph, sources=None, seed: int = 0) -> np.ndarray:
    """``None``: all nodes when N <= 2000, else 256 seeded samples.

    ``"all"`` or an explicit sequence of ids select directly; an int k
    draws k distinct seeded sources.
    """
    if sources is None:
        sources = "all" if graph.n <= EXACT_SOURCE_LIMIT else DEFAULT_SOURCE_SAMPLE
    if isinstance(sources, str):
        if sources != "all":
            raise GraphError(f"unknown source selector {sources!r}")
        return np.arange(graph.n, dtype=np.int64)
    if isinstance(sources, (int, np.integer)):
        k = int(sources)
        if k <= 0:
            raise GraphError("source sample must be non-empty")
        if k >= graph.n:
            return np.arange(graph.n, dtype=np.int64)
        picked = make_rng(seed, key("sources")).choice(graph.n, size=k, replace=False)
        return np.sort(picked).astype(np.int64)
    arr = np.asarray(sources, dtype=np.int64).ravel()
    if arr.size == 0:
        raise GraphError("source sample must be non-empty")
    if arr.min() < 0 or arr.max() >= graph.n:
        raise GraphError("source id out of range")
    return arr


def network_gain(graph: Graph, mem: MemoryDeployment, sources=None, seed: int = 0) -> FlowReport:
    """Network-wide gain with optimal (memory-aware) routing."""
    mem.validate(graph)
    require_connected(graph)
    src = resolve_sources(graph, sources, seed)
    f0, K, B = _flows_optimal(graph.indptr, graph.indices, mem.array(), mem.g, src)
    return FlowReport.from_split(f0, K, B, mem.g, M=mem.M, N=graph.n, seed=seed)


def network_gain_naive_routing(graph: Graph, mem: MemoryDeployment, sources=None,
                               seed: int = 0) -> FlowReport:
    """Network-wide gain when flows keep their plain shortest paths.

    Each path is fixed by taking, at every node, the smallest-id neighbor one
    hop closer to the source. The flow is compressed up to the first memory
    it meets after the source (the destination itself counts) and travels
    uncompressed from there.
    """
    mem.validate(graph)
    require_connected(graph)
    src = resolve_sources(graph, sources, seed)
    is_mem = np.zeros(graph.n, dtype=np.bool_)
    is_mem[list(mem.memory_nodes)] = True
    f0, K, B = _flows_naive(graph.indptr, graph.indices, is_mem, mem.g, src)
    return FlowReport.from_split(f0, K, B, mem.g, M=mem.M, N=graph.n, seed=seed)


def brute_force_costs(graph: Graph, mem: MemoryDeployment) -> np.ndarray:
    """All-pairs effective distances from all-pairs BFS (oracle, small graphs).

    ``out[s, d] = min(d(s,d), min_mu d(s,mu)/g + d(mu,d))``.
    """
    n = graph.n
    D = np.empty((n, n), dtype=np.float64)
    buf = np.empty(n, dtype=np.int32)
    for s in range(n):
        row = _bfs(graph.indptr, graph.indices, s, buf)
        D[s] = np.where(row == INF_HOPS, np.inf, row)
    out = D.copy()
    for m in mem.memory_nodes:
        out = np.minimum(out, D[:, [m]] / mem.g + D[[m], :])
    return out
