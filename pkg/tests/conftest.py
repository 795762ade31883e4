import numpy as np
import pytest

from fracspread.model import preset_model
from fracspread.spectral import Grid


@pytest.fixture
def preset():
    return preset_model()


@pytest.fixture
def small_grid():
    return Grid(2**12, 2.0**9)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one pass/fail line per acceptance criterion, collected here and repeated
# in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(name, ok, detail):
    line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
