import numpy as np
import pytest

from concmeasure.space import build_finite


def random_metric(rng, k, dim=2):
    """Euclidean distances of k random points in the plane (a genuine metric)."""
    x = rng.normal(size=(k, dim))
    return np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))


def random_space(rng, k, alpha=1.0):
    d = random_metric(rng, k)
    return build_finite(range(k), d, rng.dirichlet(np.full(k, alpha)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def two_point():
    return build_finite([0, 1], [[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
