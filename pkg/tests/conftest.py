"""
Shared fixtures for the switchstab test suite.
"""

import numpy as np
import pytest

from models.config_models import AnalysisConfig
from src.dynamics.symdyn import trial_rng
from src.kernels.lie import MatrixFamily, ProbabilityVector

E = [[0.0, 1.0], [0.0, 0.0]]
F = [[0.0, 0.0], [1.0, 0.0]]


@pytest.fixture
def config():
    return AnalysisConfig.get_default_config()


@pytest.fixture
def rng():
    return trial_rng(12345)


@pytest.fixture
def diag_pair():
    """diag(-2, 1) and diag(1, -2): each unstable, fair mixture stable"""
    return MatrixFamily.from_lists([[[-2.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, -2.0]]])


@pytest.fixture
def fair():
    return ProbabilityVector((0.5, 0.5))


@pytest.fixture
def biased():
    return ProbabilityVector((0.9, 0.1))


@pytest.fixture
def sl2_family():
    return MatrixFamily.from_lists([E, F])


@pytest.fixture
def triangular_pair():
    return MatrixFamily.from_lists([
        [[-1.0, 2.0], [0.0, 0.5]],
        [[0.3, -1.0], [0.0, -2.0]],
    ])


def random_upper_triangular(rng: np.random.Generator, n: int) -> np.ndarray:
    u = np.triu(rng.standard_normal((n, n)), 1)
    u[np.diag_indices(n)] = rng.uniform(-1.5, 1.0, n)
    return u


def common_permutation(expected, found, atol: float):
    """Index map p with found[k][i] == expected[k][p[i]] for every member k, else None"""
    want = np.stack([np.asarray(d) for d in expected])
    got = np.stack([np.asarray(d) for d in found])
    perm = []
    for i in range(got.shape[1]):
        distance = np.max(np.abs(want - got[:, [i]]), axis=0)
        j = int(np.argmin(distance))
        if distance[j] > atol:
            return None
        perm.append(j)
    return perm if sorted(perm) == list(range(got.shape[1])) else None
