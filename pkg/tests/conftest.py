import numpy as np
import pytest

from dgc.grid import ClassField, RasterGrid
from dgc.optimizer import DgcConfig
from dgc.synth import MaternSpec, generate_field, random_thin


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_field():
    """ClassField from a label list; cells equal to 0 are prediction cells"""
    def _make(labels, n_classes=None, mask=None):
        labels = np.asarray(labels, dtype=np.int64)
        if mask is None:
            mask = labels > 0
        if n_classes is None:
            n_classes = max(int(labels.max()), 2)
        return ClassField(labels, np.asarray(mask, dtype=bool), n_classes)
    return _make


@pytest.fixture(scope="session")
def synthetic_truth():
    """Small anisotropic field shared by optimizer, baseline and CLI tests"""
    return generate_field(20, 20, MaternSpec(), seed=7)


@pytest.fixture(scope="session")
def synthetic_sample(synthetic_truth):
    return random_thin(synthetic_truth, 30, seed=11)


@pytest.fixture
def quick_config():
    """Few realizations and a loose tolerance so small grids always converge"""
    return DgcConfig(n_realizations=3, n_classes=4, tol=1.0, max_retries=3, master_seed=5)


@pytest.fixture
def constant_grid():
    values = np.full((6, 6), 4.25)
    mask = np.ones((6, 6), dtype=bool)
    mask[1, 2] = mask[3, 3] = mask[4, 0] = mask[5, 5] = False
    return RasterGrid(values, mask)
