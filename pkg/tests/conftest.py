import numpy as np
import pytest

from expsel import wignerfriend


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scn():
    return wignerfriend.build_scenario(0.4, 0.7)



ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
