import numpy as np
import pytest
from scipy.linalg import expm

from minksurf.minkowski import METRIC_DIAG, Motion


def bounded_random_motion(rng, max_rapidity: float = 1.5) -> Motion:
    """Random proper Lorentz motion with bounded generator norm.

    Unbounded boosts amplify floating-point roundoff without limit, so
    equivariance tolerances are stated for generators of moderate size.
    """
    K = rng.standard_normal((4, 4))
    K = K - K.T
    spec = np.linalg.norm(K, 2)
    if spec > max_rapidity:
        K *= max_rapidity / spec
    linear = expm(np.diag(METRIC_DIAG) @ K)
    return Motion(linear, rng.standard_normal(4))


def interior(arr, margin: int = 2):
    return arr[margin:-margin, margin:-margin]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
