import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from data_handlers.network import EdgeKind, Network  # noqa: E402
from models.prior import Hyperparams  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long statistical reproductions (run with -m slow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("markexpr"):
        return
    skip_slow = pytest.mark.skip(reason="slow test, run with -m slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def hp():
    return Hyperparams()


@pytest.fixture
def triangle():
    return Network(np.ones((3, 3)) - np.eye(3))


@pytest.fixture
def path4():
    edges = np.zeros((4, 4))
    for i in range(3):
        edges[i, i + 1] = edges[i + 1, i] = 1
    return Network(edges)


@pytest.fixture
def small_binary(rng):
    """12-node undirected binary network with a few triangles."""
    n = 12
    upper = np.triu((rng.random((n, n)) < 0.35).astype(int), k=1)
    edges = upper + upper.T
    # ring so every node has at least one tie
    for i in range(n):
        j = (i + 1) % n
        edges[i, j] = edges[j, i] = 1
    return Network(edges)


@pytest.fixture
def small_counts(rng):
    n = 12
    upper = np.triu(rng.poisson(1.5, size=(n, n)), k=1)
    return Network(upper + upper.T, kind=EdgeKind.COUNT)
