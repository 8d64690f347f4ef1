import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def box_grid(lower, upper, resolution, dim):
    axis = np.linspace(lower, upper, resolution)
    return np.stack(np.meshgrid(*[axis] * dim, indexing="ij"), axis=-1).reshape(-1, dim)
