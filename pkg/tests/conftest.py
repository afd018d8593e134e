import re
import sys

import numpy as np
import pytest

from toyns.spectral import FrequencyLattice


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tiny2():
    return FrequencyLattice(2, 4, 0.37)


@pytest.fixture
def tiny3():
    return FrequencyLattice(3, 4, 0.41)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        terminalreporter.write_line(lines[key])
