import numpy as np
import pytest

from subdetect import rng


@pytest.fixture
def one_block():
    """4x4 matrix with ones on rows {1,2} x cols {1,2} (0-based), zeros elsewhere."""
    Y = np.zeros((4, 4))
    Y[1:3, 1:3] = 1.0
    return Y


def gaussian(seed, shape, index=0):
    return rng.stream(seed, index).standard_normal(shape)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
