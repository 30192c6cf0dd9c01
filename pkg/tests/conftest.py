"""
Shared fixtures for the kolmo test suite.
"""
import numpy as np
import pytest

from kolmo.grid import TensorGrid


@pytest.fixture
def rng():
    """Seeded generator; every sampling test is reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def line_grid():
    """128 cells on [-6, 6]."""
    return TensorGrid.from_bounds([(-6.0, 6.0)], [128])
