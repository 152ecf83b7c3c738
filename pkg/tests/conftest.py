import pytest

from curiefield.rng import stream


@pytest.fixture
def rng():
    return stream(20240601, "tests")

