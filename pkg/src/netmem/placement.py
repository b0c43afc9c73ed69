"""Where to put the memories.

Line networks have closed-form placements; the exact discrete optimum is
found by search for comparison. Erdos-Renyi graphs get a uniform random
sample. Power-law graphs get their high-weight core. A greedy k-median pass
is provided as a heuristic baseline for arbitrary small graphs.

On a line of ``n`` hops the nodes are 0..n, the source is node 0 and a
memory at hop distance ``t`` is node ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from os import PathLike

import numba
import numpy as np

from .graph import Graph, GraphError, _bfs, generate_line
from .routing import MemoryDeployment, total_flow
from .rng import key, make_rng

EXHAUSTIVE_MAX_N = 400
EXHAUSTIVE_MAX_M = 2
GREEDY_MAX_N = 2000


def round_toward_source(x: float) -> int:
    """Nearest integer, halves rounded down (toward the source)."""
    return int(math.ceil(x - 0.5))


@dataclass(frozen=True)
class LinePlacement:
    n: int
    g: float
    positions: tuple[int, ...]
    coverages: tuple[int, ...]

    def __post_init__(self):
        prev = 0
        for t, tau in zip(self.positions, self.coverages):
            if not prev < t <= self.n:
                raise GraphError(f"positions must satisfy 0 < t_1 < ... < t_M <= n, got {self.positions}")
            if not 0 <= tau <= t - prev:
                raise GraphError(f"left coverage {tau} outside [0, {t - prev}]")
            prev = t

    @property
    def M(self) -> int:
        return len(self.positions)

    def deployment(self) -> MemoryDeployment:
        return MemoryDeployment(self.positions, self.g)


def _check_line_args(n: int, g: float) -> None:
    if n < 2:
        raise GraphError("a line needs n >= 2 hops")
    if not g >= 1.0:
        raise GraphError("gain g must be >= 1")


def line_optimal_single(n: int, g: float) -> LinePlacement:
    """Best single memory: t = 2g/(3g+1) n and tau = (g-1)/(3g+1) n."""
    _check_line_args(n, g)
    t = min(max(round_toward_source(2 * g / (3 * g + 1) * n), 1), n)
    tau = min(round_toward_source((g - 1) / (3 * g + 1) * n), t)
    return LinePlacement(n, float(g), (t,), (tau,))


def line_optimal_multi(n: int, M: int, g: float) -> LinePlacement:
    """Large-M placement: t_i = (i/M) n and tau_i = (g-1)/(2gM) n.

    For M = 1 this puts the memory at the far end, unlike
    :func:`line_optimal_single`, which is the better choice there.
    """
    _check_line_args(n, g)
    if M < 1:
        raise GraphError("need M >= 1")
    if M > n:
        raise GraphError(f"M = {M} memories do not fit on a line of {n} hops")
    ts = [min(max(round_toward_source(i * n / M), 1), n) for i in range(1, M + 1)]
    tau = round_toward_source((g - 1) / (2 * g * M) * n)
    prev = 0
    covs = []
    for t in ts:
        covs.append(min(tau, t - prev))
        prev = t
    return LinePlacement(n, float(g), tuple(ts), tuple(covs))


# closed-form network gains on a line, source at one end

def single_memory_gain(g: float) -> float:
    """Gain of the optimal single memory, (3g+1)^2 / (3g^2 + 10g + 3)."""
    return (3 * g + 1) ** 2 / (3 * g * g + 10 * g + 3)


def reference_multi_gain(g: float, M: int) -> float:
    """Reference multi-memory gain, 2g^2 M / (2g(M+1) + g^2 + 1)."""
    return 2 * g * g * M / (2 * g * (M + 1) + g * g + 1)


def continuum_multi_gain(g: float, M: int) -> float:
    """Exact continuum gain of the t_i = iN/M placement, 2g^2 M / (2gM + g^2 - 1).

    Derived directly: the first segment is served plainly up to t_1 - tau and
    every memory covers tau to its left and the rest of its segment to its
    right, with nothing past t_M = N.
    """
    return 2 * g * g * M / (2 * g * M + g * g - 1)


def line_flows(n: int, positions, g: float) -> tuple[float, float]:
    """(F0, F) on a line with the source at node 0, vectorized."""
    d = np.arange(1, n + 1, dtype=np.float64)
    cost = d.copy()
    for t in positions:
        np.minimum(cost, t / g + np.abs(d - t), out=cost)
    return float(d.sum()), float(cost.sum())


def left_coverages(n: int, positions, g: float) -> tuple[int, ...]:
    """Destinations left of each memory that it serves (ties go to the plain route)."""
    d = np.arange(0, n + 1, dtype=np.float64)
    pos = np.asarray(positions, dtype=np.int64)
    if pos.size == 0:
        return ()
    via = pos[:, None] / g + np.abs(d[None, :] - pos[:, None])
    best = via.argmin(axis=0)
    served = np.minimum(via.min(axis=0), d) < d - 1e-9
    covs = []
    for i, t in enumerate(pos):
        mask = served & (best == i) & (d < t)
        covs.append(int(mask.sum()))
    return tuple(covs)


TIE_DG = 1e-6


@numba.njit(cache=True)
def _scan_position(base, base2, g, lo, hi):
    """argmin over t in [lo, hi] of sum_D min(base[D], t/g + |D - t|).

    Exact ties (every t ties at g = 1) are broken by the same flow at
    g + TIE_DG, with ``base2`` the other memories' costs at that gain; this
    picks the limit of the optimum as the gain decreases to g.
    """
    n = base.size - 1
    best_t = -1
    best_f = np.inf
    best_f2 = np.inf
    g2 = g + TIE_DG
    for t in range(lo, hi + 1):
        f = 0.0
        f2 = 0.0
        off = t / g
        off2 = t / g2
        for dd in range(1, n + 1):
            c = off + abs(dd - t)
            b = base[dd]
            f += c if c < b else b
            c = off2 + abs(dd - t)
            b = base2[dd]
            f2 += c if c < b else b
        if f < best_f - 1e-9 or (f <= best_f + 1e-9 and f2 < best_f2 - 1e-12):
            best_f = f
            best_f2 = f2
            best_t = t
    return best_t, best_f, best_f2


@numba.njit(cache=True)
def _exhaustive_pair(base, g):
    n = base.size - 1
    g2 = g + TIE_DG
    best_f = np.inf
    best_f2 = np.inf
    best1 = -1
    best2 = -1
    cur = np.empty(n + 1)
    cur2 = np.empty(n + 1)
    for t1 in range(1, n):
        for dd in range(n + 1):
            c = t1 / g + abs(dd - t1)
            cur[dd] = c if c < base[dd] else base[dd]
            c = t1 / g2 + abs(dd - t1)
            cur2[dd] = c if c < base[dd] else base[dd]
        t2, f, f2 = _scan_position(cur, cur2, g, t1 + 1, n)
        if f < best_f - 1e-9 or (f <= best_f + 1e-9 and f2 < best_f2 - 1e-12):
            best_f = f
            best_f2 = f2
            best1 = t1
            best2 = t2
    return best1, best2


@dataclass(frozen=True)
class BruteForceResult:
    placement: LinePlacement
    F0: float
    F: float
    exhaustive: bool

    @property
    def G(self) -> float:
        return self.F0 / self.F


def _base_costs(n: int, positions, g: float, skip: int) -> tuple[np.ndarray, np.ndarray]:
    d = np.arange(0, n + 1, dtype=np.float64)
    base = d.copy()
    base2 = d.copy()
    for j, t in enumerate(positions):
        if j != skip:
            np.minimum(base, t / g + np.abs(d - t), out=base)
            np.minimum(base2, t / (g + TIE_DG) + np.abs(d - t), out=base2)
    return base, base2


def line_brute_force(n: int, M: int, g: float, max_sweeps: int = 50) -> BruteForceResult:
    """Discrete optimum of the exact line flow.

    Exhaustive when n <= 400 and M <= 2 (a full scan of t is exhaustive for
    any M = 1). Otherwise coordinate descent from the closed-form placement:
    each memory in turn moves to its best position given the others, until a
    sweep changes nothing.
    """
    _check_line_args(n, g)
    if M < 1 or M > n:
        raise GraphError("need 1 <= M <= n")
    d0 = np.arange(0, n + 1, dtype=np.float64)
    exhaustive = M == 1 or (n <= EXHAUSTIVE_MAX_N and M <= EXHAUSTIVE_MAX_M)
    if M == 1:
        t, _, _ = _scan_position(d0, d0, float(g), 1, n)
        positions = [t]
    elif exhaustive:
        t1, t2 = _exhaustive_pair(d0, float(g))
        positions = [t1, t2]
    else:
        positions = list((line_optimal_single(n, g) if M == 1 else line_optimal_multi(n, M, g)).positions)
        for _ in range(max_sweeps):
            moved = False
            for i in range(M):
                base, base2 = _base_costs(n, positions, g, i)
                t, _, _ = _scan_position(base, base2, float(g), 1, n)
                if t != positions[i] and t not in positions:
                    cur = line_flows(n, positions, g)[1]
                    trial = positions[:i] + [t] + positions[i + 1:]
                    if line_flows(n, trial, g)[1] < cur - 1e-9:
                        positions = trial
                        moved = True
            if not moved:
                break
    positions = sorted(positions)
    F0, F = line_flows(n, positions, g)
    pl = LinePlacement(n, float(g), tuple(positions), left_coverages(n, positions, g))
    return BruteForceResult(pl, F0, F, exhaustive)


def simulate_line(placement: LinePlacement) -> tuple[float, float]:
    """(F0, F) from the routing engine on an explicit line graph."""
    line = generate_line(placement.n + 1)
    r = total_flow(line, placement.deployment(), 0)
    return r.F0, r.F


# random graphs

def er_uniform_placement(graph: Graph, M: int, g: float, seed: int) -> MemoryDeployment:
    """First M nodes of a seeded random permutation.

    Placements for growing M are nested, so flow can only drop as M grows.
    """
    if not 0 <= M <= graph.n:
        raise GraphError(f"cannot place {M} memories on {graph.n} nodes")
    perm = make_rng(seed, key("uniform-placement")).permutation(graph.n)
    return MemoryDeployment(np.sort(perm[:M]), g)


def solve_core_threshold(beta: float, wbar: float) -> tuple[float, float]:
    """(l, gamma) with gamma = (1 - 1/(b-1))^2 (b-1)/(3-b) and l^(3-b) = 1/(wbar gamma)."""
    if not 2.0 < beta < 3.0:
        raise GraphError(f"beta must lie in (2, 3), got {beta}")
    if not wbar > 0:
        raise GraphError("wbar must be positive")
    gamma = (1 - 1 / (beta - 1)) ** 2 * (beta - 1) / (3 - beta)
    l = (1 / (wbar * gamma)) ** (1 / (3 - beta))
    return l, gamma


@dataclass(frozen=True)
class CoreSelection:
    l: float
    gamma: float
    w_min: float
    threshold: float  # effective weight cut, core = {w > threshold}
    nodes: np.ndarray = field(repr=False)
    core_fraction: float
    periphery_statistic: float
    whole_statistic: float

    def deployment(self, g: float) -> MemoryDeployment:
        return MemoryDeployment(self.nodes, g)


def periphery_statistic(w: np.ndarray, in_core: np.ndarray) -> float:
    """sum_U w'^2 / sum_U w' over the periphery U with rescaled weights
    w' = w sum_U w / sum_G w, which reduces to sum_U w^2 / sum_G w."""
    u = w[~in_core]
    return float(np.sum(u * u) / np.sum(w))


def core_from_weights(w: np.ndarray, beta: float, wbar: float) -> CoreSelection:
    """Core of a weighted graph.

    The cut is max(l w_min, w_min, c_k), where c_k is the weight below the
    fewest top-weight nodes whose removal brings the periphery statistic
    under one. The literal l w_min cut alone can fall under w_min.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.size == 0:
        raise GraphError("graph carries no weights")
    l, gamma = solve_core_threshold(beta, wbar)
    w_min = float(w.min())
    order = np.argsort(-w, kind="stable")
    ws = w[order]
    tail = np.cumsum((ws * ws)[::-1])[::-1] / w.sum()  # tail[k]: statistic after removing top k
    below = np.flatnonzero(tail < 1.0)
    k = int(below[0]) if below.size else w.size
    # distinct weights assumed; nodes tied with the k-th weight stay out
    c_k = float(ws[k]) if k < w.size else -math.inf
    cut = max(l * w_min, w_min, c_k) if k < w.size else max(l * w_min, w_min)
    if k == w.size:
        cut = min(cut, float(ws[-1]) - 1.0)
    in_core = w > cut
    nodes = np.flatnonzero(in_core).astype(np.int64)
    frac = nodes.size / w.size
    return CoreSelection(l=l, gamma=gamma, w_min=w_min, threshold=cut, nodes=nodes,
                         core_fraction=frac, periphery_statistic=periphery_statistic(w, in_core),
                         whole_statistic=periphery_statistic(w, np.zeros(w.size, bool)))


def rplg_core(graph: Graph, params) -> CoreSelection:
    if graph.weights is None:
        raise GraphError("core selection needs the expected-degree weights of the graph")
    return core_from_weights(graph.weights, params.beta, params.wbar)


def top_degree_core(graph: Graph, fraction: float) -> np.ndarray:
    """The ceil(fraction N) highest realized-degree nodes, ties to smaller id."""
    if not 0.0 <= fraction <= 1.0:
        raise GraphError("core fraction must lie in [0, 1]")
    k = math.ceil(round(fraction * graph.n, 9))
    deg = graph.degrees()
    order = np.lexsort((np.arange(graph.n), -deg))
    return np.sort(order[:k]).astype(np.int64)


# greedy k-median baseline

@numba.njit(cache=True)
def _all_pairs(indptr, indices):
    n = indptr.size - 1
    D = np.empty((n, n), dtype=np.int32)
    row = np.empty(n, dtype=np.int32)
    for s in range(n):
        _bfs(indptr, indices, s, row)
        D[s] = row
    return D


@numba.njit(cache=True)
def _greedy(D, src, g, M, forbid):
    n = D.shape[0]
    ns = src.size
    cost = np.empty((ns, n))
    for a in range(ns):
        for v in range(n):
            cost[a, v] = D[src[a], v]
    chosen = np.empty(M, dtype=np.int64)
    used = forbid.copy()
    for step in range(M):
        best = -1
        best_gain = -1.0
        for mu in range(n):
            if used[mu]:
                continue
            gain = 0.0
            for a in range(ns):
                off = D[src[a], mu] / g
                for v in range(n):
                    c = off + D[mu, v]
                    if c < cost[a, v]:
                        gain += cost[a, v] - c
            if gain > best_gain + 1e-9:
                best_gain = gain
                best = mu
        if best < 0:
            return chosen[:step]
        chosen[step] = best
        used[best] = True
        for a in range(ns):
            off = D[src[a], best] / g
            for v in range(n):
                c = off + D[best, v]
                if c < cost[a, v]:
                    cost[a, v] = c
    return chosen


def greedy_kmedian_placement(graph: Graph, M: int, g: float, sources=None,
                             exclude_sources: bool = False) -> MemoryDeployment:
    """Heuristic baseline: add, one at a time, the node that lowers total flow most.

    Flow is summed over ``sources`` (default all nodes) and all destinations.
    Ties go to the smaller node id.
    """
    if graph.n > GREEDY_MAX_N:
        raise GraphError(f"greedy placement is limited to N <= {GREEDY_MAX_N}")
    if not 0 <= M <= graph.n:
        raise GraphError(f"cannot place {M} memories on {graph.n} nodes")
    src = np.arange(graph.n, dtype=np.int64) if sources is None else np.asarray(sources, dtype=np.int64)
    D = _all_pairs(graph.indptr, graph.indices)
    if (D == np.iinfo(np.int32).max).any():
        raise GraphError("graph is disconnected; take giant_component() first")
    forbid = np.zeros(graph.n, dtype=np.bool_)
    if exclude_sources:
        forbid[src] = True
    chosen = _greedy(D, src, float(g), int(M), forbid)
    return MemoryDeployment(chosen, g)


# serialization

def write_placement(path: str | PathLike, nodes, strategy: str, g: float,
                    seed: int | None = None, threshold: float | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(format_placement(nodes, strategy, g, seed, threshold))


def format_placement(nodes, strategy: str, g: float, seed: int | None = None,
                     threshold: float | None = None) -> str:
    head = f"# strategy={strategy} g={g!r} seed={'' if seed is None else seed}"
    head += f" threshold={'' if threshold is None else repr(float(threshold))}\n"
    return head + "".join(f"{int(x)}\n" for x in nodes)


def read_placement(path: str | PathLike) -> tuple[np.ndarray, dict]:
    meta: dict = {}
    nodes = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
                continue
            try:
                nodes.append(int(line))
            except ValueError:
                raise GraphError(f"{path}:{lineno}: expected a node id, got {line!r}") from None
    return np.array(nodes, dtype=np.int64), meta
