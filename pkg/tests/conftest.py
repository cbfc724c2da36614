import numpy as np
import pytest

from pseudofrac import DomainSpec, GridFunction, build_grid


@pytest.fixture(scope="session")
def unit_square():
    return DomainSpec.rect((0.5, 0.5))


@pytest.fixture(scope="session")
def grid8(unit_square):
    return build_grid(unit_square, 1.0 / 8)


@pytest.fixture(scope="session")
def grid6(unit_square):
    return build_grid(unit_square, 1.0 / 6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_function(grid, rng):
    return GridFunction(grid, rng.uniform(-1.0, 1.0, grid.size))


# one PASS/FAIL line per acceptance criterion, shown after the run
ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
