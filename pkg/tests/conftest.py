import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pwacert import library

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def scalar():
    return library.scalar_system(), library.scalar_controller()


@pytest.fixture(scope="session")
def quadrant():
    return library.quadrant_system(), library.quadrant_controller()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
