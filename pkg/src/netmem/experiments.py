"""Reproducible network-gain experiments.

Each experiment returns an :class:`ExperimentReport`: one row per instance
carrying its seed, plus mean and standard deviation rows per parameter
tuple, recomputable from the instance rows. Instance ``i`` of a run with
master seed ``s`` uses seed ``s + i``; every random stream inside derives
from that seed, so a report is a pure function of its arguments.
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .graph import Graph, RplgParams, generate_er, generate_rplg, giant_component
from .placement import (
    continuum_multi_gain,
    core_from_weights,
    er_uniform_placement,
    single_memory_gain,
    line_brute_force,
    line_optimal_multi,
    line_optimal_single,
    reference_multi_gain,
    simulate_line,
    top_degree_core,
)
from .routing import MemoryDeployment, network_gain, network_gain_naive_routing, resolve_sources

DEFAULT_INSTANCES = 5
# average expected degree used for power-law graphs unless given; the
# largest value whose beta = 2.5, N = 5000 core stays within 3% of the nodes
DEFAULT_WBAR = 1.25
DEFAULT_CORE_FRACTIONS = (0.025, 0.05, 0.10)
DEFAULT_BETAS = (2.2, 2.5, 2.8)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    param_cols: tuple[str, ...]
    metric_cols: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)

    def sorted_rows(self) -> list[dict]:
        return sorted(self.rows, key=lambda r: tuple(r[c] for c in self.param_cols) + (r.get("seed") or 0,))

    def aggregates(self) -> list[tuple[dict, dict, dict]]:
        """(params, mean, std) per parameter tuple, in sorted order."""
        groups: dict[tuple, list[dict]] = {}
        for r in self.sorted_rows():
            groups.setdefault(tuple(r[c] for c in self.param_cols), []).append(r)
        out = []
        for key_, rows in groups.items():
            mean, std = {}, {}
            for m in self.metric_cols:
                vals = np.array([float(r[m]) for r in rows], dtype=np.float64)
                mean[m] = float(vals.mean())
                std[m] = float(vals.std())
            out.append((dict(zip(self.param_cols, key_)), mean, std))
        return out

    def mean(self, metric: str, **params) -> float:
        for p, mean, _ in self.aggregates():
            if all(p[k] == v for k, v in params.items()):
                return mean[metric]
        raise KeyError(f"no rows with {params}")

    def header_lines(self) -> list[str]:
        cfg = " ".join(f"{k}={_fmt(v) if not isinstance(v, (list, tuple)) else ','.join(map(_fmt, v))}"
                       for k, v in self.config.items())
        return [f"# experiment={self.experiment} {cfg}".rstrip()]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        if header:
            for line in self.header_lines():
                buf.write(line + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("kind",) + self.param_cols + ("seed",) + self.metric_cols)
        for r in self.sorted_rows():
            w.writerow(["instance"] + [_fmt(r[c]) for c in self.param_cols] + [_fmt(r.get("seed"))]
                       + [_fmt(r[m]) for m in self.metric_cols])
        for p, mean, std in self.aggregates():
            for kind, vals in (("mean", mean), ("std", std)):
                w.writerow([kind] + [_fmt(p[c]) for c in self.param_cols] + [""]
                           + [_fmt(vals[m]) for m in self.metric_cols])
        return buf.getvalue()

    def plot_data(self, x: str, y: str, series: str | None = None) -> str:
        """``x,y,series`` triples from the mean rows."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("x", "y", "series"))
        for p, mean, _ in self.aggregates():
            xv = p[x] if x in p else mean[x]
            label = f"{series}={_fmt(p[series])}" if series else y
            w.writerow([_fmt(xv), _fmt(mean[y]), label])
        return buf.getvalue()


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _map(fn, items: list, jobs: int | None) -> list:
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    if jobs == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- lines

def line_curves(g_values, n: int = 10_000) -> ExperimentReport:
    """Single-memory line: closed-form t/N, tau/N, G next to the discrete
    optimum and the simulated gain of the closed-form placement."""
    rep = ExperimentReport(
        "line-curves", {"n": n, "g": list(g_values)}, ("g",),
        ("t_over_N", "tau_over_N", "G_closed", "t_opt_over_N", "tau_opt_over_N", "G_opt", "G_sim"))
    for g in g_values:
        if g < 1:
            raise ValueError("g values must be >= 1")
        pl = line_optimal_single(n, g)
        f0, f = simulate_line(pl)
        opt = line_brute_force(n, 1, g)
        rep.rows.append({
            "g": float(g), "seed": None,
            "t_over_N": 2 * g / (3 * g + 1), "tau_over_N": (g - 1) / (3 * g + 1),
            "G_closed": single_memory_gain(g),
            "t_opt_over_N": opt.placement.positions[0] / n,
            "tau_opt_over_N": opt.placement.coverages[0] / n,
            "G_opt": opt.G, "G_sim": f0 / f,
        })
    return rep


def line_multi(M_values, g_values, n: int = 10_000, optimize: bool = False) -> ExperimentReport:
    """Evenly spaced memories t_i = iN/M: simulated gain against the
    reference closed form and the exact continuum expression."""
    metrics = ("G_sim", "G_reference", "G_continuum") + (("G_opt",) if optimize else ())
    rep = ExperimentReport("line-multi", {"n": n, "M": list(M_values), "g": list(g_values),
                                          "optimize": optimize}, ("M", "g"), metrics)
    for M in M_values:
        for g in g_values:
            pl = line_optimal_multi(n, M, g)
            f0, f = simulate_line(pl)
            row = {"M": int(M), "g": float(g), "seed": None, "G_sim": f0 / f,
                   "G_reference": reference_multi_gain(g, M), "G_continuum": continuum_multi_gain(g, M)}
            if optimize:
                row["G_opt"] = line_brute_force(n, M, g).G
            rep.rows.append(row)
    return rep


# ---------------------------------------------------------------- Erdos-Renyi

def er_gain_prediction(g: float, M: int, N: int) -> float:
    """g / (1 - g log_N(M/N)), the large-M prediction for uniform placement."""
    return g / (1 - g * math.log(M / N) / math.log(N))


def _er_instance(args):
    N, g, exponents, seed = args
    graph, _ = giant_component(generate_er(N, 2 * math.log(N) / N, seed))
    src = resolve_sources(graph, None, seed)
    rows = []
    for a in exponents:
        M = min(math.ceil(round(N ** a, 9)), graph.n)
        mem = er_uniform_placement(graph, M, g, seed)
        r = network_gain(graph, mem, src, seed)
        rows.append({"N": N, "a": float(a), "seed": seed, "n_giant": graph.n, "M": M,
                     "F0": r.F0, "F": r.F, "G": r.G, "G_pred": er_gain_prediction(g, M, N)})
    return rows


def er_threshold_sweep(N_list, g: float, exponents, instances: int = DEFAULT_INSTANCES,
                       seed: int = 0, jobs: int | None = 1) -> ExperimentReport:
    """Uniform placement of M = ceil(N^a) memories on G(N, 2 ln N / N).

    Placements are nested in M and the sampled sources are shared across
    exponents, so within an instance G is non-decreasing in a.
    """
    rep = ExperimentReport("er-threshold", {"N": list(N_list), "g": g, "a": list(exponents),
                                            "instances": instances, "seed": seed},
                           ("N", "a"), ("n_giant", "M", "F0", "F", "G", "G_pred"))
    tasks = [(int(N), float(g), tuple(exponents), seed + i) for N in N_list for i in range(instances)]
    for rows in _map(_er_instance, tasks, jobs):
        rep.rows.extend(rows)
    return rep


# ---------------------------------------------------------------- power-law graphs

@numba.njit(cache=True)
def _fppc_kernel(indptr, indices, in_core, sources):
    n = indptr.size - 1
    dist = np.empty(n, dtype=np.int32)
    queue = np.empty(n, dtype=np.int32)
    via = np.zeros(n, dtype=np.bool_)
    hit = 0
    total = 0
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
        via[s] = False
        for qi in range(1, tail):
            v = queue[qi]
            parent = -1
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if dist[u] == dist[v] - 1:
                    parent = u
                    break
            via[v] = via[parent] or in_core[v]
            total += 1
            if via[v]:
                hit += 1
    return hit, total


def fppc(graph: Graph, core, sources=None, seed: int = 0) -> float:
    """Fraction of shortest paths that meet ``core`` after leaving the source.

    The destination counts, as in fixed-path routing where a memory at D
    still decodes. The path from S to D is fixed by stepping, from D, to the
    smallest-id neighbor one hop closer to S. Pairs are (sampled source,
    every other node).
    """
    in_core = np.zeros(graph.n, dtype=np.bool_)
    in_core[np.asarray(core, dtype=np.int64)] = True
    src = resolve_sources(graph, sources, seed)
    hit, total = _fppc_kernel(graph.indptr, graph.indices, in_core, src)
    return hit / total if total else 0.0


def rplg_instance(N: int, beta: float, wbar: float, seed: int, delta_max: float | None = None) -> Graph:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        graph = generate_rplg(RplgParams(beta, wbar, N, delta_max), seed)
    return giant_component(graph)[0]


def _rplg_task(args):
    N, beta, fractions, g, seed, wbar, delta, what = args
    graph = rplg_instance(N, beta, wbar, seed, delta)
    src = resolve_sources(graph, None, seed)
    rows = []
    for cf in fractions:
        core = top_degree_core(graph, cf)
        row = {"N": N, "beta": beta, "core_fraction": cf, "seed": seed, "n_giant": graph.n, "M": core.size}
        if "fppc" in what:
            row["FPPC"] = fppc(graph, core, src, seed)
        if "gain" in what or "naive" in what:
            mem = MemoryDeployment(core, g)
            opt = network_gain(graph, mem, src, seed)
            row.update(F0=opt.F0, F=opt.F, G=opt.G)
            if "naive" in what:
                row["G_naive"] = network_gain_naive_routing(graph, mem, src, seed).G
        rows.append(row)
    return rows


def _rplg_report(name, metrics, what, N, betas, fractions, g, instances, seed, wbar, delta, jobs):
    cfg = {"N": N, "beta": list(betas), "core_fraction": list(fractions), "g": g,
           "instances": instances, "seed": seed, "wbar": wbar, "delta_max": delta}
    rep = ExperimentReport(name, cfg, ("N", "beta", "core_fraction"), metrics)
    tasks = [(int(N), float(b), tuple(float(f) for f in fractions), float(g), seed + i, wbar, delta, what)
             for b in betas for i in range(instances)]
    for rows in _map(_rplg_task, tasks, jobs):
        rep.rows.extend(rows)
    return rep


def fppc_experiment(N: int = 5000, betas=DEFAULT_BETAS, core_fractions=(0.01, 0.02, 0.05),
                    instances: int = DEFAULT_INSTANCES, seed: int = 0, wbar: float = DEFAULT_WBAR,
                    delta_max: float | None = None, jobs: int | None = 1) -> ExperimentReport:
    return _rplg_report("fppc", ("n_giant", "M", "FPPC"), ("fppc",), N, betas, core_fractions,
                        math.nan, instances, seed, wbar, delta_max, jobs)


def rplg_gain_experiment(N: int = 4000, betas=DEFAULT_BETAS, core_fractions=DEFAULT_CORE_FRACTIONS,
                         g: float = 3.0, instances: int = DEFAULT_INSTANCES, seed: int = 0,
                         wbar: float = DEFAULT_WBAR, delta_max: float | None = None,
                         jobs: int | None = 1) -> ExperimentReport:
    """Memories on the top-degree core, memory-aware routing, with the
    fixed-path gain measured on the same graphs, placements and sources."""
    return _rplg_report("rplg-gain", ("n_giant", "M", "F0", "F", "G", "G_naive"), ("gain", "naive"),
                        N, betas, core_fractions, g, instances, seed, wbar, delta_max, jobs)


def naive_cap_experiment(N: int = 4000, betas=DEFAULT_BETAS, core_fractions=DEFAULT_CORE_FRACTIONS,
                         g: float = 1e6, instances: int = DEFAULT_INSTANCES, seed: int = 0,
                         wbar: float = DEFAULT_WBAR, delta_max: float | None = None,
                         jobs: int | None = 1) -> ExperimentReport:
    """Fixed shortest-path routing with a very large g; stays below 2g/(g+1)."""
    return _rplg_report("naive-cap", ("n_giant", "M", "F0", "F", "G", "G_naive"), ("naive",),
                        N, betas, core_fractions, g, instances, seed, wbar, delta_max, jobs)


def core_scaling(N_list, betas=DEFAULT_BETAS, wbar: float = DEFAULT_WBAR,
                 delta_max: float | None = None, instances: int = 0, seed: int = 0) -> ExperimentReport:
    """Core size from the expected degrees, per (N, beta).

    With ``instances > 0`` each row also reports, for a sampled graph, the
    largest component left after deleting the core, as a fraction of N.
    """
    metrics = ("l", "gamma", "threshold", "core_size", "core_fraction", "periphery_statistic")
    if instances:
        metrics += ("periphery_giant_fraction",)
    rep = ExperimentReport("core-scaling", {"N": list(N_list), "beta": list(betas), "wbar": wbar,
                                            "delta_max": delta_max, "instances": instances, "seed": seed},
                           ("N", "beta"), metrics)
    for N in N_list:
        for b in betas:
            params = RplgParams(b, wbar, int(N), delta_max)
            sel = core_from_weights(params.weights(), b, wbar)
            base = {"N": int(N), "beta": float(b), "l": sel.l, "gamma": sel.gamma, "threshold": sel.threshold,
                    "core_size": int(sel.nodes.size), "core_fraction": sel.core_fraction,
                    "periphery_statistic": sel.periphery_statistic}
            if not instances:
                rep.rows.append(dict(base, seed=None))
                continue
            for i in range(instances):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    graph = generate_rplg(params, seed + i)
                keep = np.setdiff1d(np.arange(graph.n), sel.nodes)
                rest, _ = giant_component(graph.subgraph(keep)[0])
                rep.rows.append(dict(base, seed=seed + i, periphery_giant_fraction=rest.n / graph.n))
    return rep


EXPERIMENTS = ("line-curves", "line-multi", "er-threshold", "core-scaling", "fppc", "rplg-gain", "naive-cap")
