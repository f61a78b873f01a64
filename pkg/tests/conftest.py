import numpy as np
import pytest

from szegoutm.conformal import DiscMap, build_ellipse_map, solve_sc_parameters

QUAD = [4 - 1j, 3j, -4 - 1j, 0j]

# acceptance verdicts collected during the run and repeated in the terminal summary
VERDICTS: dict = {}


def record(criterion: int, ok: bool, detail: str = ""):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
    VERDICTS[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[k])


@pytest.fixture(scope="session")
def disc():
    return DiscMap()


@pytest.fixture(scope="session")
def ellipse21():
    return build_ellipse_map(2.0, 1.0)


@pytest.fixture(scope="session")
def quad_map():
    return solve_sc_parameters(QUAD)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_disc_points(rng, n, rmax=0.9):
    r = rmax * np.sqrt(rng.uniform(0, 1, n))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, n))
