import math
import time

import numpy as np
import pytest

from ionkdv.config import RunConfig
from ionkdv.harness import run_sweep
from ionkdv.hierarchy import solve_hierarchy
from ionkdv.kdv import soliton_exact
from ionkdv.spectral import make_grid

# acceptance lines collected by test_acceptance and printed at the end
AC_LINES: dict[int, str] = {}


def record_ac(number: int, name: str, passed: bool, detail: str) -> None:
    AC_LINES[number] = f"AC{number:<2d} {'PASS' if passed else 'FAIL'}  {name}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not AC_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(AC_LINES):
        terminalreporter.write_line(AC_LINES[n])


@pytest.fixture(scope="session")
def grid():
    return make_grid(40 * math.pi, 512)


@pytest.fixture(scope="session")
def soliton_corrections(grid):
    """Correction hierarchy on the default soliton run (k=0.5, T=1, dt=0.0025)."""
    return solve_hierarchy(grid, soliton_exact(grid, 0.5, 0.0), 1.0, 0.0025)


@pytest.fixture(scope="session")
def default_sweep():
    """``(report, seconds)`` for the default 12-case sweep."""
    t0 = time.perf_counter()
    report = run_sweep(RunConfig())
    return report, time.perf_counter() - t0


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)
