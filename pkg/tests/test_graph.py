import math
import warnings

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netmem.graph import (
    DisconnectedGraphError,
    Graph,
    GraphError,
    RplgParams,
    _rplg_skip,
    average_distance,
    bfs_distances,
    generate_er,
    generate_line,
    generate_rplg,
    giant_component,
    is_connected,
    read_edge_list,
    write_edge_list,
)
from netmem.rng import make_rng

from conftest import floyd_warshall


def rplg(params, seed):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return generate_rplg(params, seed)


# ---------------------------------------------------------------- structure

def test_line_small():
    g = generate_line(2)
    assert g.edge_count == 1
    assert g.neighbors(0).tolist() == [1]
    g5 = generate_line(5)
    assert g5.edge_count == 4
    assert bfs_distances(g5, 0).dist.tolist() == [0, 1, 2, 3, 4]


def test_line_far_end():
    assert bfs_distances(generate_line(10_000), 0).dist[9999] == 9999


def test_line_too_short():
    with pytest.raises(GraphError):
        generate_line(1)


def test_from_edges_rejects_bad_input():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [0], [0])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [0, 1], [1, 0])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [0], [3])


@given(st.integers(2, 40), st.floats(0.0, 1.0), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_er_simple_undirected(n, p, seed):
    g = generate_er(n, p, seed)
    for u in range(n):
        nb = g.neighbors(u)
        assert u not in nb
        assert np.unique(nb).size == nb.size
        for v in nb:
            assert u in g.neighbors(v)


def test_er_extremes():
    assert generate_er(100, 0.0, 1).edge_count == 0
    assert generate_er(100, 1.0, 1).edge_count == 4950
    with pytest.raises(GraphError):
        generate_er(10, 1.5, 0)


def test_er_deterministic():
    assert generate_er(500, 0.02, 9) == generate_er(500, 0.02, 9)
    assert generate_er(500, 0.02, 9) != generate_er(500, 0.02, 10)


def test_er_mean_edge_count():
    n = 10_000
    p = 2 * math.log(n) / n
    counts = [generate_er(n, p, s).edge_count for s in range(20)]
    expect = n * (n - 1) / 2 * p
    assert abs(np.mean(counts) - expect) / expect < 0.03


def test_er_degree_concentration():
    n = 10_000
    p = 2 * math.log(n) / n
    deg = generate_er(n, p, 3).degrees()
    mu = (n - 1) * p
    assert np.abs(deg - mu).max() <= 5 * math.sqrt(mu)


def test_er_pair_frequencies_match_p():
    # every pair is hit with frequency p, none favoured by the gap sampler
    n, p, reps = 12, 0.3, 3000
    hits = np.zeros((n, n))
    for s in range(reps):
        u, v = generate_er(n, p, s).edges()
        hits[u, v] += 1
    iu = np.triu_indices(n, 1)
    freq = hits[iu] / reps
    assert np.abs(freq - p).max() < 4 * math.sqrt(p * (1 - p) / reps)


# ---------------------------------------------------------------- power-law graphs

def test_rplg_params_validation():
    with pytest.raises(GraphError):
        RplgParams(3.0, 4, 100)
    with pytest.raises(GraphError):
        RplgParams(2.5, 1.0, 100)
    with pytest.raises(GraphError):
        RplgParams(2.5, 4.0, 100, delta_max=2.0)
    p = RplgParams(2.5, 4.0, 5000)
    assert p.delta_max == pytest.approx(math.sqrt(5000 * 4))
    assert p.c > 0 and p.i0 > 0


def test_rplg_weights_formula():
    p = RplgParams(2.5, 4.0, 5000)
    w = p.weights()
    i = p.i0 + np.arange(5000)
    assert np.allclose(w, p.c * i ** (-1 / 1.5))
    assert w[0] == pytest.approx(p.delta_max, rel=1e-9)
    assert np.all(np.diff(w) <= 0)


def test_rplg_average_degree():
    p = RplgParams(2.5, 4.0, 5000)
    means = [rplg(p, s).degrees().mean() for s in range(5)]
    assert abs(np.mean(means) - 4.0) / 4.0 < 0.10


def test_rplg_degree_tracks_weights():
    p = RplgParams(2.5, 4.0, 3000)
    deg = np.mean([rplg(p, s).degrees() for s in range(10)], axis=0)
    w = p.weights()
    top = slice(0, 30)
    assert np.allclose(deg[top], w[top], rtol=0.25)


def test_rplg_degree_tail_slope():
    p = RplgParams(2.5, 4.0, 5000)
    deg = np.concatenate([rplg(p, s).degrees() for s in range(5)])
    # log-binned degree density, slope of the tail against degree
    edges = np.unique(np.round(np.logspace(np.log10(4), np.log10(60), 9)))
    counts, _ = np.histogram(deg, bins=edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    dens = counts / np.diff(edges)
    ok = counts > 0
    slope = np.polyfit(np.log(centers[ok]), np.log(dens[ok]), 1)[0]
    assert -2.8 <= slope <= -2.2


def test_rplg_clamp_counter():
    p = RplgParams(2.2, 20.0, 400, delta_max=200.0)
    with pytest.warns(UserWarning):
        g = generate_rplg(p, 0)
    assert g.meta["clamped_pairs"] > 0


def test_rplg_skip_sampler_matches_scan():
    p = RplgParams(2.5, 4.0, 1500)
    w = p.weights()
    rho = 1 / w.sum()
    scan = [rplg(p, s).degrees() for s in range(30)]
    skip = []
    for s in range(30):
        u, v, _ = _rplg_skip(w, rho, make_rng(s, 99))
        skip.append(Graph.from_edges(1500, u, v, check=False).degrees())
    a, b = np.mean(scan, axis=0), np.mean(skip, axis=0)
    assert abs(a.sum() - b.sum()) / a.sum() < 0.02
    assert np.allclose(a[:20], b[:20], rtol=0.15)


def test_rplg_giant_component_linear():
    g = rplg(RplgParams(2.5, 4.0, 4000), 1)
    giant, _ = giant_component(g)
    assert giant.n > 0.5 * g.n


def test_rplg_deterministic():
    p = RplgParams(2.5, 4.0, 800)
    assert rplg(p, 5) == rplg(p, 5)


# ---------------------------------------------------------------- components and distances

def test_giant_component_tie_break():
    # two triangles and an isolated node; the triangle with node 0 wins the tie
    g = Graph.from_edges(7, [1, 2, 1, 0, 4, 0], [2, 3, 3, 4, 5, 5])
    giant, mapping = giant_component(g)
    assert giant.n == 3
    assert mapping[0] == 0 and mapping[4] >= 0 and mapping[1] == -1


def test_giant_component_path_and_idempotence():
    line = generate_line(20)
    assert giant_component(line)[0] == line
    g = generate_er(300, 0.008, 2)
    once = giant_component(g)[0]
    assert giant_component(once)[0] == once


def test_subcritical_er_misses_nodes():
    n = 2000
    g = generate_er(n, 0.5 * math.log(n) / n, 4)
    assert giant_component(g)[0].n < n
    assert not is_connected(g)


def test_giant_component_empty():
    with pytest.raises(GraphError):
        giant_component(Graph.from_edges(0, [], []))


def test_bfs_complete_graph():
    g = generate_er(10, 1.0, 0)
    assert bfs_distances(g, 3).dist.tolist() == [1, 1, 1, 0, 1, 1, 1, 1, 1, 1]


def test_bfs_out_of_range():
    with pytest.raises(GraphError):
        bfs_distances(generate_line(4), 4)


def test_bfs_unreachable_marked_infinite():
    g = Graph.from_edges(4, [0], [1])
    f = bfs_distances(g, 0).as_float()
    assert f[1] == 1 and math.isinf(f[2]) and math.isinf(f[3])


@pytest.mark.parametrize("seed", range(10))
def test_bfs_matches_floyd_warshall(seed):
    g = generate_er(30, 0.12, seed)
    D = floyd_warshall(g)
    for s in range(g.n):
        assert np.array_equal(bfs_distances(g, s).as_float(), D[s])


def test_bfs_symmetric_and_lipschitz():
    g, _ = giant_component(generate_er(400, 0.02, 8))
    rows = np.array([bfs_distances(g, s).dist for s in range(g.n)])
    assert np.array_equal(rows, rows.T)
    u, v = g.edges()
    assert np.abs(rows[0, u] - rows[0, v]).max() <= 1


def test_average_distance_small_cases():
    assert average_distance(generate_er(10, 1.0, 0)) == 1.0
    assert average_distance(generate_line(101)) == pytest.approx(34.0, abs=1e-12)


def test_average_distance_matches_networkx():
    g, _ = giant_component(generate_er(200, 0.03, 6))
    h = nx.Graph(list(zip(*map(np.ndarray.tolist, g.edges()))))
    assert average_distance(g) == pytest.approx(nx.average_shortest_path_length(h), rel=1e-12)


def test_average_distance_er_scaling():
    n = 10_000
    p = 2 * math.log(n) / n
    d = average_distance(generate_er(n, p, 0), 64, 0)
    pred = math.log(n) / math.log(n * p)
    assert abs(d - pred) / pred < 0.20


def test_average_distance_disconnected():
    with pytest.raises(DisconnectedGraphError):
        average_distance(Graph.from_edges(4, [0], [1]))


# ---------------------------------------------------------------- IO

def test_edge_list_roundtrip(tmp_path):
    g = rplg(RplgParams(2.5, 3.0, 300), 2)
    write_edge_list(g, tmp_path / "g.edges", tmp_path / "w.txt", comment="made for a test")
    text = (tmp_path / "g.edges").read_text()
    assert text.startswith("# made for a test\n")
    h = read_edge_list(tmp_path / "g.edges", tmp_path / "w.txt")
    assert h == g
    assert np.array_equal(h.weights, g.weights)


def test_edge_list_rejects_duplicates(tmp_path):
    path = tmp_path / "bad.edges"
    path.write_text("3 2\n0 1\n1 0\n")
    with pytest.raises(GraphError):
        read_edge_list(path)
    path.write_text("3 1\n1 1\n")
    with pytest.raises(GraphError):
        read_edge_list(path)
    path.write_text("3 2\n0 1\n")
    with pytest.raises(GraphError):
        read_edge_list(path)
