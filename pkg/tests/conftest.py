from __future__ import annotations

import numpy as np
import pytest

from qcat.classical import Sl2IntMatrix


@pytest.fixture
def cat():
    return Sl2IntMatrix(2, 1, 1, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hyperbolic(rng) -> Sl2IntMatrix:
    """Random trace > 2 matrix as a product of positive shears."""
    a = int(rng.integers(1, 4))
    c = int(rng.integers(1, 4))
    return Sl2IntMatrix(1, a, 0, 1) @ Sl2IntMatrix(1, 0, c, 1)


def random_gaussian_state(rng, h: float):
    from qcat.metaplectic import GaussianState

    theta = complex(rng.uniform(-1.0, 1.0), rng.uniform(0.3, 3.0))
    amp = complex(rng.uniform(0.2, 1.5), rng.uniform(-1.0, 1.0))
    return GaussianState(amp, theta, float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)), h)
