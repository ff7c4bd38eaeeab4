import math

import numpy as np
import pytest

from qcneumann import Source, build_grid


@pytest.fixture(scope="session")
def disc_grid0():
    return build_grid(Source.UNIT_DISC, 0)


@pytest.fixture(scope="session")
def square_grid0():
    return build_grid(Source.CENTERED_SQUARE, 0)


def spiral_points(n: int, radius: float = 0.95) -> np.ndarray:
    """Deterministic low-discrepancy interior points (golden-angle spiral)."""
    i = np.arange(1, n + 1)
    r = radius * np.sqrt((i - 0.5) / n)
    theta = i * math.pi * (3.0 - math.sqrt(5.0))
    return r * np.exp(1j * theta)
