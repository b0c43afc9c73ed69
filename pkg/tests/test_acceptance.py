"""Acceptance checks, one test per criterion. Each prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from netmem.cli import main
from netmem.compress.ctw import CtwCodec
from netmem.compress.gain import measure_gain
from netmem.compress.lz import PresetDictionary, lz_decode_with_dict, lz_encode_with_dict
from netmem.compress.sources import binary_markov_bytes, synthetic
from netmem.dedup import dedup_bench, dedup_decode, dedup_encode, index_build, planted_corpus, tandem_decode, tandem_encode
from netmem.experiments import (
    er_threshold_sweep,
    fppc_experiment,
    line_curves,
    line_multi,
    naive_cap_experiment,
    rplg_gain_experiment,
)
from netmem.routing import MemoryDeployment, effective_distances, modified_dijkstra

from conftest import D1, D2, KB, MB, MU, S
from test_routing import oracle_costs, random_instance

ROUNDTRIPS = 10_000


@pytest.fixture
def verdict(capsys):
    def emit(number, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return emit


def _within(x, target, rel):
    return abs(x - target) <= rel * abs(target)


def test_criterion_01_routing_oracle(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(200):
        graph, mem = random_instance(seed)
        assert graph.n <= 30 and len(mem.memory_nodes) <= 3 and mem.g in (1.5, 2.0, 3.0)
        B = oracle_costs(graph, mem)
        for d in range(graph.n):
            worst = max(worst, float(np.abs(modified_dijkstra(graph, mem, d) - B[:, d]).max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 10
    verdict(1, ok, f"200 graphs, max |error| = {worst:.1e}, {dt:.1f} s")
    assert ok


def test_criterion_02_detour_example(detour_graph, verdict):
    t = effective_distances(detour_graph, MemoryDeployment([MU], 3), S)
    ok = t.d_hat[D1] == 2.0 and t.d_hat[D2] == 2.0
    verdict(2, ok, f"d_hat(D1) = {float(t.d_hat[D1])!r}, d_hat(D2) = {float(t.d_hat[D2])!r}")
    assert ok


def test_criterion_03_line_single(verdict):
    t0 = time.perf_counter()
    rep = line_curves([3.0, 1e6], n=10_000)
    r3, rinf = rep.sorted_rows()
    dt = time.perf_counter() - t0
    target = (3 * 3 + 1) ** 2 / (3 * 9 + 10 * 3 + 3)
    ok_t = _within(r3["t_opt_over_N"], 0.6, 0.01)
    ok_g = _within(r3["G_opt"], target, 0.02) and _within(r3["G_sim"], target, 0.02)
    ok_inf = _within(rinf["G_opt"], 3.0, 0.05)
    ok = ok_t and ok_g and ok_inf and dt < 30
    verdict(3, ok, f"t/n = {r3['t_opt_over_N']:.4f}, G(3) = {r3['G_opt']:.4f} vs {target:.4f}, "
                   f"G(1e6) = {rinf['G_opt']:.4f}, {dt:.1f} s")
    assert ok


def test_criterion_04_line_multi(verdict):
    t0 = time.perf_counter()
    rep = line_multi([2, 4, 8], [3.0, 1e6], n=10_000)
    dt = time.perf_counter() - t0
    parts = []
    ok_a = ok_b = True
    for M in (2, 4, 8):
        g = 3.0
        formula = 2 * g * g * M / (2 * g * (M + 1) + g * g + 1)
        sim = rep.mean("G_sim", M=M, g=g)
        ok_a &= _within(sim, formula, 0.02)
        big = rep.mean("G_sim", M=M, g=1e6)
        ok_b &= _within(big, 2 * M, 0.05)
        parts.append(f"M={M}: G={sim:.4f} vs {formula:.4f}, G(1e6)={big:.3f}")
    ok = ok_a and ok_b and dt < 60
    verdict(4, ok, f"(a) {'ok' if ok_a else 'off'} (b) {'ok' if ok_b else 'off'}; " + "; ".join(parts)
            + f"; {dt:.1f} s")
    assert ok


def test_criterion_05_er_threshold(verdict):
    t0 = time.perf_counter()
    a_list = [0.0, 0.13, 0.33, 0.53, 0.8, 1.0]
    rep = er_threshold_sweep([10_000], 3.0, a_list, instances=5, seed=0)
    dt = time.perf_counter() - t0
    means = [rep.mean("G", a=a) for a in a_list]
    per_seed_ok = True
    for seed in range(5):
        gs = [r["G"] for r in sorted((r for r in rep.rows if r["seed"] == seed), key=lambda r: r["a"])]
        per_seed_ok &= all(x <= y for x, y in zip(gs, gs[1:]))
    ok1 = per_seed_ok and all(x <= y for x, y in zip(means, means[1:]))
    ok2 = all(r["G"] < 1.1 for r in rep.rows if r["a"] <= 0.13)
    ok3 = all(r["G"] == 3.0 for r in rep.rows if r["a"] == 1.0)
    pred = rep.mean("G_pred", a=0.8)
    ok4 = _within(means[4], pred, 0.25)
    ok = ok1 and ok2 and ok3 and ok4 and dt < 300
    verdict(5, ok, "G by a = " + ", ".join(f"{m:.3f}" for m in means)
            + f"; a=0.8 prediction {pred:.3f}; checks {ok1},{ok2},{ok3},{ok4}; {dt:.1f} s")
    assert ok


def test_criterion_06_fppc(verdict):
    t0 = time.perf_counter()
    rep = fppc_experiment(5000, (2.5,), (0.02,), instances=5, seed=0)
    dt = time.perf_counter() - t0
    f = rep.mean("FPPC")
    ok = f > 0.9 and dt < 180
    verdict(6, ok, f"mean FPPC = {f:.4f}, {dt:.1f} s")
    assert ok


@pytest.fixture(scope="module")
def rplg_reports():
    t0 = time.perf_counter()
    gain = rplg_gain_experiment(4000, (2.2, 2.5, 2.8), (0.025, 0.05, 0.10), g=3.0, instances=5, seed=0)
    t1 = time.perf_counter()
    cap = naive_cap_experiment(4000, (2.2, 2.5, 2.8), (0.025, 0.05, 0.10), g=1e6, instances=5, seed=0)
    t2 = time.perf_counter()
    return gain, cap, t1 - t0, t2 - t1


def test_criterion_07_rplg_gain(rplg_reports, verdict):
    rep, _, dt, _ = rplg_reports
    g = {(b, c): rep.mean("G", beta=b, core_fraction=c) for b in (2.2, 2.5, 2.8) for c in (0.025, 0.05, 0.10)}
    level = g[(2.8, 0.025)]
    ok_level = level >= 1.8
    ok_core = all(g[(b, 0.025)] < g[(b, 0.05)] < g[(b, 0.10)] for b in (2.2, 2.5, 2.8))
    ok_beta = all(g[(2.2, c)] < g[(2.5, c)] < g[(2.8, c)] for c in (0.025, 0.05, 0.10))
    ok = ok_level and ok_core and ok_beta and dt < 600
    verdict(7, ok, f"G(beta=2.8, 2.5%) = {level:.4f} (need >= 1.8); increasing in core {ok_core}, "
                   f"in beta {ok_beta}; {dt:.1f} s")
    assert ok


def test_criterion_08_naive_cap(rplg_reports, verdict):
    gain, cap, _, dt = rplg_reports
    # same seeds and parameters, so the same graphs and core placements
    assert [r["n_giant"] for r in gain.sorted_rows()] == [r["n_giant"] for r in cap.sorted_rows()]
    worst = max(r["G_naive"] for r in cap.rows)
    ok = worst <= 2.05
    verdict(8, ok, f"largest naive-routing G at g=1e6 = {worst:.4f} over {len(cap.rows)} runs, {dt:.1f} s")
    assert ok


def _roundtrip_count(check, strategy) -> int:
    seen = [0]

    @given(strategy)
    @settings(max_examples=ROUNDTRIPS, derandomize=True, database=None, deadline=None,
              suppress_health_check=list(HealthCheck))
    def run(x):
        check(x)
        seen[0] += 1

    run()
    return seen[0]


def test_criterion_09_losslessness(verdict):
    t0 = time.perf_counter()
    mem = synthetic("markov:3:0.95", 4 * KB, seed=1)
    primed = CtwCodec(16, mem[:512])
    lz_dict = PresetDictionary(mem)
    index = index_build(mem)
    tandem_codec = CtwCodec(8, mem[:512])
    data = st.binary(max_size=200)
    spliced = st.tuples(st.binary(max_size=120), st.integers(0, len(mem) - 1), st.integers(0, 300)).map(
        lambda t: t[0][:60] + mem[t[1]:t[1] + t[2]] + t[0][60:])

    def ctw_fresh(x):
        assert CtwCodec(8).decode(CtwCodec(8).encode(x)) == x

    def ctw_primed(x):
        assert primed.clone().decode(primed.clone().encode(x)) == x

    def lz_plain(x):
        assert lz_decode_with_dict(lz_encode_with_dict(x)) == x

    def lz_preset(x):
        assert lz_decode_with_dict(lz_encode_with_dict(x, lz_dict), lz_dict) == x

    def dd(x):
        assert dedup_decode(dedup_encode(x, index), index) == x

    def tandem(x):
        assert tandem_decode(tandem_encode(x, index, tandem_codec.clone()), index, tandem_codec.clone()) == x

    counts = {
        "ctw-fresh": _roundtrip_count(ctw_fresh, data),
        "ctw-primed": _roundtrip_count(ctw_primed, spliced),
        "lz": _roundtrip_count(lz_plain, data),
        "lz-dict": _roundtrip_count(lz_preset, spliced),
        "dedup": _roundtrip_count(dd, spliced),
        "tandem": _roundtrip_count(tandem, spliced),
    }
    dt = time.perf_counter() - t0
    ok = all(v >= ROUNDTRIPS for v in counts.values()) and dt < 120
    verdict(9, ok, ", ".join(f"{k} {v}" for k, v in counts.items()) + f" roundtrips, 0 failures, {dt:.1f} s")
    assert ok


def test_criterion_10_compression_quality(ctw_gain_4mb, markov_corpus, verdict):
    t0 = time.perf_counter()
    x = binary_markov_bytes(64 * KB, 0.9, seed=0)
    rate = len(CtwCodec(16).encode(x)) * 8 / (len(x) * 8)
    h = -(0.1 * math.log2(0.1) + 0.9 * math.log2(0.9))
    ok1 = abs(rate - h) <= 0.05
    ok2 = ctw_gain_4mb.g > 1.5
    g0 = measure_gain(markov_corpus, "ctw", KB, 0, trials=30, seed=0, depth=16).g
    ok3 = g0 == 1.0
    dt = time.perf_counter() - t0
    ok = ok1 and ok2 and ok3
    verdict(10, ok, f"(i) rate {rate:.4f} vs h(0.1) = {h:.4f}; (ii) g(1kB, 4MB) = {ctw_gain_4mb.g:.3f}; "
                    f"(iii) g(n, 0) = {g0!r}; {dt:.1f} s after the shared gain fixture")
    assert ok


def test_criterion_11_tandem(verdict):
    t0 = time.perf_counter()
    planted = dedup_bench(planted_corpus(MB, 2 * MB, copies=10, block=100_000, seed=0), MB)
    # A: long duplicates amid incompressible filler; B: Markov data without planted duplicates
    a = dedup_bench(planted_corpus(MB, 2 * MB, copies=10, block=100_000, filler="uniform", seed=0), MB)
    b = dedup_bench(synthetic("markov:3:0.95", 2 * MB, seed=1), MB)
    dt = time.perf_counter() - t0
    ok_dom = planted.tandem_bits_per_byte <= min(planted.dd_bits_per_byte, planted.codec_bits_per_byte)
    ok_a = a.dd_bits_per_byte < a.codec_bits_per_byte
    ok_b = b.codec_bits_per_byte < b.dd_bits_per_byte
    ok = ok_dom and ok_a and ok_b and dt < 180
    verdict(11, ok, f"planted DD {planted.dd_bits_per_byte:.3f} CTW {planted.codec_bits_per_byte:.3f} "
                    f"DD+CTW {planted.tandem_bits_per_byte:.3f}; A DD {a.dd_bits_per_byte:.3f} < CTW "
                    f"{a.codec_bits_per_byte:.3f}; B CTW {b.codec_bits_per_byte:.3f} < DD "
                    f"{b.dd_bits_per_byte:.3f} bits/byte; {dt:.1f} s")
    assert ok


RERUNS = [
    ["experiment", "line-curves", "--g", "1,3,10", "--n", "2000"],
    ["experiment", "line-multi", "--M", "2,4", "--g", "3,1e6", "--n", "2000", "--optimize"],
    ["experiment", "er-threshold", "--N", "1000", "--a", "0,0.5,1", "--instances", "3"],
    ["experiment", "core-scaling", "--N", "1000,2000", "--instances", "2"],
    ["experiment", "fppc", "--N", "1000", "--instances", "3"],
    ["experiment", "rplg-gain", "--N", "1000", "--instances", "3"],
    ["experiment", "naive-cap", "--N", "1000", "--instances", "3"],
]


def test_criterion_12_determinism(tmp_path, verdict, capsys):
    same = []
    for k, argv in enumerate(RERUNS):
        outs = []
        for run, jobs in enumerate(("1", "2")):
            path = tmp_path / f"{k}-{run}.csv"
            assert main(argv + ["--seed", "11", "--jobs", jobs, "-o", str(path)]) == 0
            outs.append(path.read_bytes())
        same.append(outs[0] == outs[1] and len(outs[0]) > 0)
    ok = all(same)
    verdict(12, ok, f"{sum(same)}/{len(RERUNS)} experiments byte-identical across reruns (jobs 1 vs 2)")
    assert ok
