import pytest

from brenier_bounds import PotentialSpec


@pytest.fixture
def quad1():
    """|x|^2 in one dimension."""
    return PotentialSpec.quadratic(1.0, 1)


@pytest.fixture
def quad_quarter():
    """|x|^2 / 4 in one dimension (Hessian 1/2)."""
    return PotentialSpec.quadratic(0.25, 1)
