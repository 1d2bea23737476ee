import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def unit_xi(n, direction=None):
    """Frequency with 2 pi |xi| = 1 along ``direction`` (first axis by default)."""
    d = np.zeros(n) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        d[0] = 1.0
    return d / (2 * np.pi * np.linalg.norm(d))
