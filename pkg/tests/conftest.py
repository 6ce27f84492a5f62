import numpy as np
import pytest

from cloudcolor import ColorPointCloud


def make_cloud(positions, colors) -> ColorPointCloud:
    return ColorPointCloud(np.asarray(positions, dtype=np.float64),
                           np.asarray(colors, dtype=np.int64))


def random_cloud(rng: np.random.Generator, n: int, scale: float = 1.0) -> ColorPointCloud:
    positions = rng.uniform(-scale, scale, (n, 3))
    colors = rng.integers(0, 256, (n, 3))
    return ColorPointCloud(positions, colors)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
