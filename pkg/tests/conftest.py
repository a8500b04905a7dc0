import numpy as np
import pytest

from evhats.events import EventStream, SensorGeometry

ACCEPTANCE_LINES = []


def random_stream(rng, width=16, height=16, n=200, t_max=20_000, label=None):
    """Uniform events on a grid; integer timestamps so ties do occur."""
    g = SensorGeometry(width, height)
    t = np.sort(rng.integers(0, t_max, n))
    return EventStream.from_arrays(
        g, rng.integers(0, width, n), rng.integers(0, height, n), t, rng.choice([-1, 1], n), label
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
