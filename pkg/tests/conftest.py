import numpy as np
import pytest

from bmcgan.dynamics import FAMILIES, SystemSpec

ACCEPTANCE_LINES = []


@pytest.fixture
def wgan():
    return SystemSpec(FAMILIES["wgan_linear"], 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
