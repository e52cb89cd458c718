import pytest

from nstars.params import ModelParams, derive

SET_N4 = ModelParams(4, 0.4, 0.4, 0.4)
SET_N5 = ModelParams(5, 0.4, 0.4, 0.4)
SET_DIV = ModelParams(5, 0.9, 0.5, 0.9)


@pytest.fixture
def d1():
    return derive(SET_N4)


@pytest.fixture
def d6():
    return derive(SET_DIV)
