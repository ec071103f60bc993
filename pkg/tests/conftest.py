import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rayleigh(rng, shape):
    """CN(0, 1) entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
