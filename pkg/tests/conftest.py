import numpy as np
import pytest

from oqw.io import parse_matrix
from oqw.lattice import HomogeneousWalkZ

_LINES = []


@pytest.fixture
def report():
    """Record one summary line; all of them are shown at the end of the run."""
    def add(criterion, ok, detail):
        line = f"[acceptance {criterion}] {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _LINES.append(line)
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)


# B = diag(1, sqrt(3)/2, 3/5), C = diag(0, 1/2, 4/5), rationals exact at parse time
DIAG_B = [[1, 0, 0], [0, 0.8660254037844386, 0], [0, 0, "3/5"]]
DIAG_C = [[0, 0, 0], [0, "1/2", 0], [0, 0, "4/5"]]


@pytest.fixture
def diag_walk():
    return HomogeneousWalkZ(parse_matrix(DIAG_B), parse_matrix(DIAG_C))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
