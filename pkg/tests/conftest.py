import numpy as np
import pytest

import logsp as L
from logsp.energy import ProblemParams
from logsp.fields import random_smooth_field


@pytest.fixture(scope="session")
def spec():
    return L.make_grid(12.0, 256)


@pytest.fixture(scope="session")
def tables(spec):
    return L.build_kernel_tables(spec)


@pytest.fixture(scope="session")
def small_spec():
    return L.make_grid(10.0, 128)


@pytest.fixture(scope="session")
def small_tables(small_spec):
    return L.build_kernel_tables(small_spec)


@pytest.fixture
def gauss(spec):
    """e^{-|x|^2/2} with its closure attached."""
    return L.gaussian(spec)


@pytest.fixture(scope="session")
def well1():
    return L.builtin_well1()


@pytest.fixture(scope="session")
def well2():
    return L.builtin_well2()


@pytest.fixture(scope="session")
def const1():
    return L.builtin_constant(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def p4b1():
    return ProblemParams(4.0, 1.0)


@pytest.fixture
def p3b1():
    return ProblemParams(3.0, 1.0)


def smooth_fields(spec, count, seed=7, **kw):
    rng = np.random.default_rng(seed)
    return [random_smooth_field(spec, rng, **kw) for _ in range(count)]
