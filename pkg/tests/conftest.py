import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def separated_clouds(n_per_class=10, p=4, distance=10.0, seed=0):
    """Two Gaussian clouds (sd 1) whose centres are `distance` apart along x1."""
    r = np.random.default_rng(seed)
    X = r.standard_normal((2 * n_per_class, p))
    X[n_per_class:, 0] += distance
    X -= X.mean(axis=0)
    return X, np.repeat([1, 2], n_per_class)


def centered_random(r, n, p):
    X = r.standard_normal((n, p))
    return X - X.mean(axis=0)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
