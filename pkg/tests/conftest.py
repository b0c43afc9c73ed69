import numpy as np
import pytest

from netmem.graph import Graph

# node names of the seven-node detour example
S, C1, C3, D1, C4, MU, D2 = range(7)


def seven_node_example() -> Graph:
    """Source S with two branches: S-C1-D1-mu and S-C3-C4-D2, closed by D2-mu."""
    return Graph.from_edges(7, [S, S, C1, D1, C3, C4, D2], [C1, C3, D1, MU, C4, D2, MU])


@pytest.fixture
def detour_graph() -> Graph:
    return seven_node_example()


def floyd_warshall(graph: Graph) -> np.ndarray:
    """All-pairs hop distances by Floyd-Warshall (oracle, small graphs)."""
    n = graph.n
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0.0)
    u, v = graph.edges()
    D[u, v] = 1.0
    D[v, u] = 1.0
    for k in range(n):
        D = np.minimum(D, D[:, k:k + 1] + D[k:k + 1, :])
    return D


# ---------------------------------------------------------------- shared expensive fixtures

MARKOV_SOURCE = "markov:3:0.95"
KB = 1024
MB = 1 << 20


@pytest.fixture(scope="session")
def markov_corpus():
    """4 MiB of memory followed by 512 KiB of fresh packets from the same source."""
    from netmem.compress.sources import synthetic

    return synthetic(MARKOV_SOURCE, 4 * MB + 512 * KB, seed=0)


@pytest.fixture(scope="session")
def ctw_gain_4mb(markov_corpus):
    from netmem.compress.gain import measure_gain

    return measure_gain(markov_corpus, "ctw", KB, 4 * MB, trials=30, seed=0, depth=16)
