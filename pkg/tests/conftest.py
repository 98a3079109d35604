import numpy as np
import pytest

from regrisk import build_problem, decompose


@pytest.fixture(scope="session")
def problem16():
    return build_problem(16, 16, 0.06, 0.1)


@pytest.fixture(scope="session")
def dec16(problem16):
    return decompose(problem16.A)


@pytest.fixture(scope="session")
def wide_problem():
    # m < n exercises the sub-rank branches
    return build_problem(8, 12, 0.06, 0.1)


@pytest.fixture()
def draw16(problem16):
    rng = np.random.default_rng(20240816)
    eps = problem16.sigma * rng.standard_normal(problem16.m)
    return problem16.A @ problem16.x_star + eps
