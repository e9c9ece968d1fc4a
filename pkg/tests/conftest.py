import sys

import numpy as np
import pytest

from reclab import RatingMatrix

NAN = np.nan

# 5 users x 10 items; u4 rated i8 with an explicit 0
SMALL = np.array([
    [NAN, 2, 3, 5, NAN, 5, NAN, 4, NAN, NAN],
    [2, NAN, NAN, NAN, NAN, NAN, NAN, NAN, 2, 3],
    [2, NAN, NAN, NAN, NAN, 1, NAN, NAN, NAN, NAN],
    [2, 2, 1, NAN, NAN, 5, NAN, 0, 2, NAN],
    [5, NAN, NAN, NAN, NAN, NAN, NAN, 5, NAN, 4],
])


@pytest.fixture
def small_dense():
    return SMALL.copy()


@pytest.fixture
def small():
    return RatingMatrix.from_dense(SMALL)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
