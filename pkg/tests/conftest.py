import pytest

from covertree import graph_core


@pytest.fixture(scope="session")
def k4():
    return graph_core.generate("complete", 4)


@pytest.fixture(scope="session")
def petersen():
    return graph_core.generate("petersen")


@pytest.fixture(scope="session")
def k33():
    return graph_core.generate("complete_bipartite", 3, 3)


@pytest.fixture(scope="session")
def k34():
    return graph_core.generate("complete_bipartite", 3, 4)


@pytest.fixture(scope="session")
def k23():
    return graph_core.generate("complete_bipartite", 2, 3)
