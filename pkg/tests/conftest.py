import numpy as np
import pytest

from stiffmod.model import identify_reference_parameters

# PASS/FAIL lines collected by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def reference_model():
    return identify_reference_parameters()


@pytest.fixture
def global_model():
    return identify_reference_parameters(2.421, 2.421)


@pytest.fixture
def local_model():
    return identify_reference_parameters(1.0, 5.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
