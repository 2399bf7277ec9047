import numpy as np
import pytest

from ccgopt.graphs import Graph, StrategyClass
from ccgopt.zdd import build_family


def braess_graph():
    """Four vertices s=0, a=1, b=2, t=3; two 2-edge routes plus the
    crossing edge 3 between a and b."""
    return Graph(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], np.ones(5),
                 ("od", 0, 3))


def single_edge_graph():
    return Graph(2, [(0, 1)], np.ones(1), ("od", 0, 1))


def two_hop_graph():
    """Path s-a-t: single strategy {1, 2}."""
    return Graph(3, [(0, 1), (1, 2)], np.ones(2), ("od", 0, 2))


def parallel_graph():
    """Two parallel edges between the same endpoints."""
    return Graph(2, [(0, 1), (0, 1)], np.ones(2), ("od", 0, 1))


def k3_graph():
    return Graph(3, [(0, 1), (0, 2), (1, 2)], np.ones(3))


def k4_graph():
    return Graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
                 np.ones(6))


def grid3x3_graph():
    edges = []
    for r in range(3):
        for c in range(3):
            v = 3 * r + c
            if c < 2:
                edges.append((v, v + 1))
            if r < 2:
                edges.append((v, v + 3))
    return Graph(9, edges, np.ones(len(edges)), ("od", 0, 8))


def steiner6_graph():
    """2x3 grid with three terminals: two corners and a far edge mid."""
    edges = []
    for r in range(2):
        for c in range(3):
            v = 3 * r + c
            if c < 2:
                edges.append((v, v + 1))
            if r < 1:
                edges.append((v, v + 3))
    return Graph(6, edges, np.ones(len(edges)), ("terminals", (0, 5, 2)))


def k5_graph():
    edges = [(u, v) for u in range(5) for v in range(u + 1, 5)]
    return Graph(5, edges, np.ones(10))


def pendant_graph():
    """Braess-like square plus a dead-end branch off vertex 1."""
    return Graph(5, [(0, 1), (0, 2), (1, 3), (2, 3), (1, 4)], np.ones(5),
                 ("od", 0, 3))


def steiner_pair_graph():
    """Two terminals on a triangle with a tail; includes cut vertices."""
    return Graph(5, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)], np.ones(5),
                 ("terminals", (0, 4)))


def spanning_graph():
    """Steiner family with every vertex terminal = spanning trees of C4."""
    return Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], np.ones(4),
                 ("terminals", (0, 1, 2, 3)))


def disconnected_hamilton_graph():
    """Triangle plus an isolated vertex: no Hamiltonian cycle exists."""
    return Graph(4, [(0, 1), (0, 2), (1, 2)], np.ones(3))


def parallel_cycle_graph():
    """Two parallel edges form the unique length-2 closed tour."""
    return Graph(2, [(0, 1), (0, 1)], np.ones(2))


GRAPH_BUILDERS = {
    "braess": (braess_graph, "paths"),
    "single_edge": (single_edge_graph, "paths"),
    "two_hop": (two_hop_graph, "paths"),
    "parallel": (parallel_graph, "paths"),
    "pendant": (pendant_graph, "paths"),
    "k3": (k3_graph, "hamilton"),
    "k4": (k4_graph, "hamilton"),
    "k5": (k5_graph, "hamilton"),
    "parallel_cycle": (parallel_cycle_graph, "hamilton"),
    "disconnected_hamilton": (disconnected_hamilton_graph, "hamilton"),
    "grid3x3": (grid3x3_graph, "paths"),
    "steiner6": (steiner6_graph, "steiner"),
    "steiner_pair": (steiner_pair_graph, "steiner"),
    "spanning": (spanning_graph, "steiner"),
}


@pytest.fixture(scope="session")
def braess():
    return braess_graph()


@pytest.fixture(scope="session")
def braess_zdd(braess):
    return build_family(braess, StrategyClass("paths"))


@pytest.fixture(scope="session")
def k4():
    return k4_graph()


@pytest.fixture(scope="session")
def k4_zdd(k4):
    return build_family(k4, StrategyClass("hamilton"))


@pytest.fixture(scope="session")
def grid3x3():
    return grid3x3_graph()


@pytest.fixture(scope="session")
def grid3x3_zdd(grid3x3):
    return build_family(grid3x3, StrategyClass("paths"))


@pytest.fixture(scope="session")
def steiner6():
    return steiner6_graph()


@pytest.fixture(scope="session")
def steiner6_zdd(steiner6):
    return build_family(steiner6, StrategyClass("steiner"))


@pytest.fixture(scope="session")
def single_edge_zdd():
    return build_family(single_edge_graph(), StrategyClass("paths"))


BRAESS_FAMILY = [(1, 3, 5), (1, 4), (2, 3, 4), (2, 5)]
