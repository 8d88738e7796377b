import os

import numpy as np
import pytest

from loma import kernels

DATA_DIR = os.environ.get("LOMA_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "data"))


def random_orthonormal(rng, D, k):
    Q, _ = np.linalg.qr(rng.standard_normal((D, k)))
    return Q


def sphere_points(rng, n, center, radius, basis):
    """``n`` points uniformly on the sphere ``center + radius * basis @ u``, ``|u| = 1``."""
    g = rng.standard_normal((n, basis.shape[1]))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return center + radius * g @ basis.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    return kernels.get_backend(request.param)


def data_file(*names):
    for name in names:
        path = os.path.join(DATA_DIR, name)
        if os.path.exists(path):
            return path
    return None
