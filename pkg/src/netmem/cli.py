"""Command-line entry point.

Every output starts with ``#`` comment lines holding the resolved run
configuration, so an output file records how to regenerate itself. Exit
status is 0 on success, 2 for usage errors and 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import __version__
from .rng import SEED_ENV, resolve_seed

log = logging.getLogger("netmem")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*a, **kw)

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in vals]


def _sources(text: str):
    if text == "all":
        return "all"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("sources must be 'all' or a count") from None


# ---------------------------------------------------------------- output

def _config_line(args) -> str:
    skip = {"output", "jobs", "verbose", "func", "plot_data"}
    parts = [f"netmem {args.command}" + (f" {args.sub}" if getattr(args, "sub", None) else "")]
    for k in sorted(vars(args)):
        if k in skip or k in ("command", "sub"):
            continue
        v = getattr(args, k)
        if isinstance(v, list):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        elif v is None:
            v = ""
        parts.append(f"{k}={v}")
    return " ".join(parts)


def _emit(args, body: str, extra_header: bool = True) -> None:
    text = (f"# {_config_line(args)}\n" if extra_header else "") + body
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", newline="\n") as fh:
            fh.write(text)


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _load_graph(args):
    from .graph import read_edge_list

    return read_edge_list(args.graph, getattr(args, "weights", None))


def _load_memories(args):
    from .placement import read_placement

    if args.memories is not None and args.mem is not None:
        raise UsageError("give either --memories FILE or --mem LIST, not both")
    if args.memories is not None:
        nodes, _ = read_placement(args.memories)
        return nodes.tolist()
    if args.mem is not None:
        return args.mem
    raise UsageError("a memory placement is required (--memories FILE or --mem LIST)")


# ---------------------------------------------------------------- commands

def cmd_generate(args) -> None:
    from .graph import RplgParams, generate_er, generate_line, generate_rplg, giant_component, write_edge_list

    if args.sub == "line":
        graph = generate_line(args.n)
    elif args.sub == "er":
        p = args.p if args.p is not None else 2 * math.log(args.n) / args.n
        args.p = p
        graph = generate_er(args.n, p, args.seed)
    else:
        graph = generate_rplg(RplgParams(args.beta, args.wbar, args.n, args.delta_max), args.seed)
    if args.giant:
        graph, _ = giant_component(graph)
    if args.output in (None, "-"):
        raise UsageError("generate needs -o PATH for the edge list")
    if args.weights_out is not None and graph.weights is None:
        raise UsageError("--weights-out only applies to rplg graphs")
    write_edge_list(graph, args.output, args.weights_out, comment=_config_line(args))


def cmd_route(args) -> None:
    from .routing import MemoryDeployment, effective_distances

    graph = _load_graph(args)
    mem = MemoryDeployment(_load_memories(args), args.g)
    mem.validate(graph)
    _emit(args, effective_distances(graph, mem, args.source).to_csv())


def cmd_place(args) -> None:
    from . import placement as pl
    from .graph import RplgParams

    need_graph = args.sub in ("uniform", "core", "top-degree", "greedy")
    if need_graph and args.graph is None:
        raise UsageError(f"place {args.sub} needs --graph")
    threshold = None
    if args.sub in ("line-single", "line-multi", "line-opt"):
        if args.n is None:
            raise UsageError(f"place {args.sub} needs --n")
        if args.sub == "line-single":
            nodes = pl.line_optimal_single(args.n, args.g).positions
        elif args.sub == "line-multi":
            nodes = pl.line_optimal_multi(args.n, args.M, args.g).positions
        else:
            nodes = pl.line_brute_force(args.n, args.M, args.g).placement.positions
    else:
        graph = _load_graph(args)
        if args.sub == "uniform":
            nodes = pl.er_uniform_placement(graph, args.M, args.g, args.seed).memory_nodes
        elif args.sub == "greedy":
            nodes = pl.greedy_kmedian_placement(graph, args.M, args.g).memory_nodes
        elif args.sub == "top-degree":
            nodes = pl.top_degree_core(graph, args.fraction).tolist()
        else:
            if args.beta is None or args.wbar is None:
                raise UsageError("place core needs --beta and --wbar")
            sel = pl.rplg_core(graph, RplgParams(args.beta, args.wbar, graph.n, args.delta_max))
            nodes, threshold = sel.nodes.tolist(), sel.threshold
    body = pl.format_placement(sorted(nodes), args.sub, args.g, args.seed, threshold)
    _emit(args, body)


def cmd_gain(args) -> None:
    from .routing import MemoryDeployment, network_gain, network_gain_naive_routing

    graph = _load_graph(args)
    mem = MemoryDeployment(_load_memories(args), args.g)
    fn = network_gain_naive_routing if args.naive else network_gain
    _emit(args, fn(graph, mem, args.sources, args.seed).to_csv())


def _corpus(args, default_len: int) -> bytes:
    from .compress.sources import synthetic

    if (args.corpus is None) == (args.synthetic is None):
        raise UsageError("give exactly one of --corpus FILE or --synthetic SPEC")
    if args.corpus is not None:
        return _read_bytes(args.corpus)
    if args.length is None:
        args.length = default_len
    return synthetic(args.synthetic, args.length, args.seed)


def cmd_compress(args) -> None:
    from .compress.gain import measure_gain

    data = _corpus(args, args.m + 4 * args.trials * args.n)
    rec = measure_gain(data, args.codec, args.n, args.m, args.trials, args.seed, args.depth, args.overlap)
    _emit(args, rec.to_csv())


def cmd_dedup(args) -> None:
    from .dedup import dedup_bench, planted_corpus

    if args.planted is not None:
        if args.corpus is not None:
            raise UsageError("--planted builds its own corpus; drop --corpus")
        filler = args.synthetic or "markov:3:0.95"
        args.synthetic = filler
        data = planted_corpus(args.m, args.planted, seed=args.seed, filler=filler)
    else:
        data = _corpus(args, args.m + 64 * args.n)
    row = dedup_bench(data, args.m, args.n, args.w, args.s, args.codec, args.cap, args.depth)
    _emit(args, row.to_csv())


def load_schema() -> dict:
    from importlib.resources import files

    return json.loads(files("netmem").joinpath("schema.json").read_text())


def cmd_experiment(args) -> None:
    from . import experiments as ex

    name = args.sub
    if name == "line-curves":
        rep = ex.line_curves(args.g, args.n)
    elif name == "line-multi":
        rep = ex.line_multi(args.M, args.g, args.n, args.optimize)
    elif name == "er-threshold":
        rep = ex.er_threshold_sweep(args.N, args.g, args.a, args.instances, args.seed, args.jobs)
    elif name == "core-scaling":
        rep = ex.core_scaling(args.N, args.beta, args.wbar, args.delta_max, args.instances, args.seed)
    elif name == "fppc":
        rep = ex.fppc_experiment(args.N, args.beta, args.core, args.instances, args.seed,
                                 args.wbar, args.delta_max, args.jobs)
    elif name == "rplg-gain":
        rep = ex.rplg_gain_experiment(args.N, args.beta, args.core, args.g, args.instances, args.seed,
                                      args.wbar, args.delta_max, args.jobs)
    else:
        rep = ex.naive_cap_experiment(args.N, args.beta, args.core, args.g, args.instances, args.seed,
                                      args.wbar, args.delta_max, args.jobs)
    if args.plot_data:
        x, y, series = load_schema()["experiments"][name]["plot"]
        body = "".join(line + "\n" for line in rep.header_lines()) + rep.plot_data(x, y, series)
    else:
        body = rep.to_csv()
    _emit(args, body)


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    if seed:
        p.add_argument("--seed", type=int, default=None,
                       help=f"master seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("-o", "--output", default=None, help="output path (default stdout)")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _graph_args(p, memories: bool = True) -> None:
    p.add_argument("--graph", required=True, help="edge-list file")
    p.add_argument("--weights", default=None, help="expected-degree sidecar file")
    if memories:
        p.add_argument("--memories", default=None, help="placement file")
        p.add_argument("--mem", type=_ints, default=None, help="comma-separated memory node ids")
        p.add_argument("--g", "--gain", dest="g", type=float, required=True, help="memory gain g >= 1")


def _rplg_args(p, g_default: float | None, core_default) -> None:
    from .experiments import DEFAULT_BETAS, DEFAULT_INSTANCES, DEFAULT_WBAR

    p.add_argument("--N", "--nodes", dest="N", type=int, default=4000)
    p.add_argument("--beta", type=_floats, default=list(DEFAULT_BETAS))
    p.add_argument("--core", "--core-fraction", dest="core", type=_floats, default=list(core_default))
    if g_default is not None:
        p.add_argument("--g", "--gain", dest="g", type=float, default=g_default)
    p.add_argument("--instances", type=int, default=DEFAULT_INSTANCES)
    p.add_argument("--wbar", type=float, default=DEFAULT_WBAR)
    p.add_argument("--delta-max", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    from .compress.ctw import DEFAULT_DEPTH
    from .dedup import DEFAULT_S, DEFAULT_W
    from .experiments import DEFAULT_CORE_FRACTIONS, DEFAULT_INSTANCES, DEFAULT_WBAR, EXPERIMENTS

    ap = _Parser(prog="netmem", description="Memory-assisted compression and network gain workbench.")
    ap.add_argument("--version", action="version", version=f"netmem {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a random or line graph as an edge list")
    gsub = gen.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    for name in ("line", "er", "rplg"):
        p = gsub.add_parser(name)
        _common(p, seed=name != "line")
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--giant", action="store_true", help="keep only the giant component")
        if name == "er":
            p.add_argument("--p", type=float, default=None, help="edge probability (default 2 ln n / n)")
        if name == "rplg":
            p.add_argument("--beta", type=float, required=True)
            p.add_argument("--wbar", type=float, default=DEFAULT_WBAR)
            p.add_argument("--delta-max", type=float, default=None)
            p.add_argument("--weights-out", default=None, help="also write the expected degrees here")
        else:
            p.set_defaults(weights_out=None)
        p.set_defaults(func=cmd_generate)

    p = sub.add_parser("route", help="effective distances from one source")
    _common(p, seed=False)
    _graph_args(p)
    p.add_argument("--source", type=int, default=0)
    p.set_defaults(func=cmd_route)

    place = sub.add_parser("place", help="compute a memory placement")
    psub = place.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    for name in ("line-single", "line-multi", "line-opt", "uniform", "core", "top-degree", "greedy"):
        p = psub.add_parser(name)
        _common(p)
        p.add_argument("--graph", default=None)
        p.add_argument("--weights", default=None)
        p.add_argument("--n", type=int, default=None, help="line length (line strategies)")
        p.add_argument("--M", "--memories-count", dest="M", type=int, default=1)
        p.add_argument("--g", "--gain", dest="g", type=float, default=3.0)
        p.add_argument("--fraction", type=float, default=0.025)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--wbar", type=float, default=None)
        p.add_argument("--delta-max", type=float, default=None)
        p.set_defaults(func=cmd_place)

    p = sub.add_parser("gain", help="network-wide gain of a placement")
    _common(p)
    _graph_args(p)
    p.add_argument("--naive", action="store_true", help="keep plain shortest paths")
    p.add_argument("--sources", type=_sources, default=None, help="'all' or a sample size")
    p.set_defaults(func=cmd_gain)

    comp = sub.add_parser("compress", help="codec benchmarks")
    csub = comp.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = csub.add_parser("bench", help="memory-assisted gain g(n, m)")
    _common(p)
    p.add_argument("--codec", choices=("ctw", "lz"), default="ctw")
    p.add_argument("--n", type=int, default=1024, help="packet bytes")
    p.add_argument("--m", "--memory-bytes", dest="m", type=int, default=4 << 20, help="memory bytes")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--overlap", action="store_true", help="draw packets from inside the memory")
    p.add_argument("--corpus", default=None)
    p.add_argument("--synthetic", default=None, help="source spec such as markov:3:0.95")
    p.add_argument("--length", type=int, default=None, help="synthetic corpus bytes")
    p.set_defaults(func=cmd_compress)

    dd = sub.add_parser("dedup", help="de-duplication benchmarks")
    dsub = dd.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = dsub.add_parser("bench", help="bits/byte of DD, codec and DD+codec")
    _common(p)
    p.add_argument("--w", type=int, default=DEFAULT_W, help="fingerprint window")
    p.add_argument("--s", type=int, default=DEFAULT_S, help="anchor sampling period")
    p.add_argument("--m", "--memory-bytes", dest="m", type=int, default=1 << 20)
    p.add_argument("--n", type=int, default=1500, help="packet bytes")
    p.add_argument("--codec", choices=("ctw", "lz"), default="ctw")
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--cap", type=int, default=None, help="store size cap in bytes")
    p.add_argument("--corpus", default=None)
    p.add_argument("--synthetic", default=None)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--planted", type=int, default=None, metavar="BYTES",
                   help="test region with planted 100kB copies of the memory")
    p.set_defaults(func=cmd_dedup)

    exp = sub.add_parser("experiment", help="reproduce a gain or scaling curve")
    esub = exp.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = esub.add_parser(name)
        _common(p)
        p.add_argument("--jobs", type=int, default=None, help="worker processes (default all cores)")
        p.add_argument("--plot-data", action="store_true", help="emit x,y,series triples")
        p.set_defaults(func=cmd_experiment)
        if name == "line-curves":
            p.add_argument("--g", "--gain", dest="g", type=_floats, default=[1.0, 2.0, 3.0, 10.0, 100.0, 1e6])
            p.add_argument("--n", type=int, default=10_000)
        elif name == "line-multi":
            p.add_argument("--M", dest="M", type=_ints, default=[2, 4, 8])
            p.add_argument("--g", "--gain", dest="g", type=_floats, default=[3.0, 1e6])
            p.add_argument("--n", type=int, default=10_000)
            p.add_argument("--optimize", action="store_true", help="also search the discrete optimum")
        elif name == "er-threshold":
            p.add_argument("--N", "--nodes", dest="N", type=_ints, default=[10_000])
            p.add_argument("--g", "--gain", dest="g", type=float, default=3.0)
            p.add_argument("--a", "--exponents", dest="a", type=_floats,
                           default=[0.0, 0.13, 0.33, 0.53, 0.8, 1.0])
            p.add_argument("--instances", type=int, default=DEFAULT_INSTANCES)
        elif name == "core-scaling":
            p.add_argument("--N", "--nodes", dest="N", type=_ints, default=[1000, 2000, 5000, 10_000])
            p.add_argument("--beta", type=_floats, default=[2.2, 2.5, 2.8])
            p.add_argument("--wbar", type=float, default=DEFAULT_WBAR)
            p.add_argument("--delta-max", type=float, default=None)
            p.add_argument("--instances", type=int, default=0,
                           help="sampled graphs per row for the periphery check")
        elif name == "fppc":
            _rplg_args(p, None, (0.01, 0.02, 0.05))
            p.set_defaults(N=5000)
        elif name == "rplg-gain":
            _rplg_args(p, 3.0, DEFAULT_CORE_FRACTIONS)
        else:
            _rplg_args(p, 1e6, DEFAULT_CORE_FRACTIONS)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="netmem: %(levelname)s: %(message)s", stream=sys.stderr)
    if hasattr(args, "seed"):
        args.seed = resolve_seed(args.seed)
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        print("netmem: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except UsageError as exc:
        print(f"netmem: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, MemoryError) as exc:
        print(f"netmem: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
