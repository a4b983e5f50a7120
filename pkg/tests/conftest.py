import numpy as np
import pytest

from trigrasp.geometry import Pose, exp_so3
from trigrasp.shapes import make_box, make_diamond_prism, make_l_shape


@pytest.fixture(scope="session")
def l_shape():
    return make_l_shape()


@pytest.fixture(scope="session")
def diamond():
    return make_diamond_prism()


@pytest.fixture(scope="session")
def unit_cube():
    return make_box((1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def small_cube():
    return make_box((0.025, 0.025, 0.025))


def random_rotation(rng):
    return exp_so3(rng.uniform(-1.5, 1.5, 3))


def random_pose(rng, span=0.3):
    return Pose(random_rotation(rng), rng.uniform(-span, span, 3))
