import numpy as np
import pytest

from gmffe.graph import from_edges, random_connected_graph


def path_graph(n, weight=1.0):
    return from_edges(n, [(i, i + 1, weight) for i in range(n - 1)])


def complete_graph(n):
    return from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def random_weighted_connected(n, seed, extra=0.3):
    g = random_connected_graph(n, extra, seed)
    rng = np.random.default_rng(seed + 1000)
    i, j, _ = g.edge_arrays()
    return from_edges(n, zip(i, j, rng.uniform(0.5, 2.0, size=i.size)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
