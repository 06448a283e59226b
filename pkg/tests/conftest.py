import numpy as np
import pytest

from fiberlip.spaces import graph_fibration

FIRST_COORD = [[1.0, 0.0]]


def line_graph(base, slope):
    """Graph of y -> (y, slope * y) over the first-coordinate quotient."""
    base = np.asarray(base, dtype=float)
    return graph_fibration(FIRST_COORD, base, {"phi": np.stack([base, slope * base], axis=1)})


@pytest.fixture
def grid():
    return np.linspace(-2.0, 2.0, 21)


@pytest.fixture
def slope3(grid):
    return line_graph(grid, 3.0)
