import pytest

from fringe_mems.capmodel import REFERENCE_GEOMETRY


@pytest.fixture
def geom():
    return REFERENCE_GEOMETRY
