import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from oscilab import SampledFunction, make_grid

settings.register_profile(
    "oscilab",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("oscilab")


@pytest.fixture
def unit_grid():
    return make_grid(0.0, 1.0, 101)


def indicator(grid, lo, hi):
    """Piecewise-linear indicator with nodes placed exactly at the jumps."""
    x = grid.nodes
    return SampledFunction(grid, ((x >= lo) & (x <= hi)).astype(float))
