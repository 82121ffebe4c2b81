import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import random_connected_graph, random_weights  # noqa: E402

from wsembed.graph import NodeWeights  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_panel(seed: int = 20240601, graphs: int = 20, weights_per_graph: int = 5):
    """Random connected graphs with n in [5, 30] and several weight vectors each."""
    rng = np.random.default_rng(seed)
    panel = []
    for _ in range(graphs):
        n = int(rng.integers(5, 31))
        g = random_connected_graph(rng, n, p=float(rng.uniform(0.1, 0.5)))
        ws = [NodeWeights(random_weights(rng, n)) for _ in range(weights_per_graph)]
        panel.append((g, ws))
    return panel


@pytest.fixture(scope="session")
def panel():
    return make_panel()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
