import pytest

from mediancert.median_core import MedianGraph
from mediancert.harness_cli import generate


@pytest.fixture(scope="session")
def q2():
    return generate("hypercube", [2])


@pytest.fixture(scope="session")
def q3():
    return generate("hypercube", [3])


@pytest.fixture(scope="session")
def q4():
    return generate("hypercube", [4])


@pytest.fixture(scope="session")
def grid3():
    # 3x3 vertices, ids i*3+j
    return generate("grid", [2, 2])


@pytest.fixture(scope="session")
def grid4():
    return generate("grid", [3, 3])


@pytest.fixture(scope="session")
def grid5():
    return generate("grid", [4, 4])


@pytest.fixture(scope="session")
def grid6():
    return generate("grid", [5, 5])


@pytest.fixture(scope="session")
def grid8():
    return generate("grid", [7, 7])


@pytest.fixture(scope="session")
def path5():
    return MedianGraph(6, [(i, i + 1) for i in range(5)])


@pytest.fixture(scope="session")
def tree23():
    return generate("tree", [2, 3])


@pytest.fixture(scope="session")
def stair3():
    return generate("staircase", [3])


@pytest.fixture(scope="session")
def stair4():
    return generate("staircase", [4])


@pytest.fixture(scope="session")
def c6():
    # even cycle: bipartite but some triples have no geodesic meeting point
    return MedianGraph(6, [(i, (i + 1) % 6) for i in range(6)])


@pytest.fixture(scope="session")
def k23():
    # complete bipartite 2x3, the classic graph with a double median
    return MedianGraph(5, [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)])


@pytest.fixture(scope="session")
def closure_zoo():
    specs = [(3, 4, 0), (4, 5, 1), (5, 6, 2), (5, 7, 3), (4, 6, 4)]
    return [generate("median-closure", [n, d], seed=s) for n, d, s in specs]
