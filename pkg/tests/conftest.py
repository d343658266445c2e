import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unitish(rng, dim):
    """A random direction with a norm jittered around 1."""
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    return v * rng.uniform(0.5, 2.0)


def random_gallery(rng, n, dim, prefix="g"):
    return {f"{prefix}{i:04d}": random_unitish(rng, dim) for i in range(n)}
