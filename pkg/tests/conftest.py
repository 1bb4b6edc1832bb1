import numpy as np
import pytest

from elscat import LameParams, make_grid
from elscat.experiments import LoadSpec, make_load


@pytest.fixture
def grid16():
    return make_grid(2.0, 16)


@pytest.fixture
def lame2():
    return LameParams(2.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pot2_load(grid, amplitude=1.0, pattern="ones"):
    return make_load(LoadSpec("pot2", amplitude=amplitude, pattern=pattern), grid)


def gaussian_load(grid, a=20.0, center=(0.0, 0.0), amplitude=1.0, matrix=None):
    x1, x2 = grid.mesh
    q = amplitude * np.exp(-a * ((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2))
    q = np.where(grid.radius < 1.0, q, 0.0)
    W = np.ones((2, 2)) if matrix is None else np.asarray(matrix, dtype=float)
    return (W[:, :, None, None] * q).astype(complex)


# one line per acceptance criterion, echoed live and repeated in the summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
