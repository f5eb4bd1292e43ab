import numpy as np
import pytest

from hardybound import DomainSpec, KernelParams, build_grid


@pytest.fixture
def unit_interval():
    return DomainSpec.intervals([[0, 1]])


@pytest.fixture
def two_intervals():
    return DomainSpec.intervals([[0, 1], [2, 4]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_grid(domain, s=0.5, p=2.0, n=16):
    params = KernelParams(s, p, domain.dimension)
    return build_grid(domain, params, n), params
