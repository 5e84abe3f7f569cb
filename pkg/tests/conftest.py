import numpy as np
import pytest

from wedgehull import SeedSpec, WedgeModel


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)


@pytest.fixture
def wedge2():
    return WedgeModel.right_angle(2)


@pytest.fixture
def wedge3():
    return WedgeModel.right_angle(3)


def make_seed(*parts) -> SeedSpec:
    from wedgehull import derive_stream

    return SeedSpec(123456789, derive_stream("test", *parts))
