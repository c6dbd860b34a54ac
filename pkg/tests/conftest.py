import sys

import numpy as np
import pytest

from weingarten.basegrid import build_grid
from weingarten.warp import WarpProfile


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sphere():
    return WarpProfile("sphere", 1.0)


@pytest.fixture
def euclid():
    return WarpProfile("euclidean")


@pytest.fixture
def s2grid():
    return build_grid("sphere2", 16, 32)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
