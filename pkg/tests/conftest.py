import numpy as np
import pytest

from roughpat.fdm import build_diff_matrices, build_grid

ACCEPTANCE_LINES = []


@pytest.fixture
def small_grid():
    return build_grid(1.0, 9, 9)


@pytest.fixture
def small_ops(small_grid):
    return build_diff_matrices(small_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
