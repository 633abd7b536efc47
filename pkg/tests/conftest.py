from fractions import Fraction

import pytest
from hypothesis import settings

from periodsieve.arith import make_field

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture
def K33():
    return make_field(33)


@pytest.fixture
def Km3():
    return make_field(-3)


@pytest.fixture
def Km4():
    return make_field(-4)


def F(n, d=1):
    return Fraction(n, d)
