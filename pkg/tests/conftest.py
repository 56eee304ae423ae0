import pytest

from chemrc.topology import Topology


@pytest.fixture
def single_node():
    """One isolated node: pure birth-death under inflow and outflow."""
    return Topology(num_nodes=1, cycle_edges=(), chord_edges=())


@pytest.fixture
def cycle3():
    """Bare directed 3-cycle with no chords."""
    return Topology(num_nodes=3, cycle_edges=((0, 1), (1, 2), (2, 0)), chord_edges=())
