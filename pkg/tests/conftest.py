"""Shared fixtures: the expensive solves run once per session."""
import numpy as np
import pytest

from leastenergy.field import Grid
from leastenergy.functionals import ProblemSpec
from leastenergy.nonlinearity import make
from leastenergy.oracle import ground_state
from leastenergy.solver import SolverConfig, solve_least_energy

CUBIC_GRID = Grid(3, 8.0, 64)
CRITICAL_GRID = Grid(2, 10.0, 128)


@pytest.fixture(scope="session")
def cubic_spec():
    return ProblemSpec(3, 2.0, make("cubic"))


@pytest.fixture(scope="session")
def critical_spec():
    return ProblemSpec(2, 2.0, make("cubic"))


@pytest.fixture(scope="session")
def coupled_spec():
    return ProblemSpec(3, 2.0, make("coupled_quartic"))


@pytest.fixture(scope="session")
def cubic_run(cubic_spec):
    return solve_least_energy(cubic_spec, SolverConfig(seed=0), CUBIC_GRID)


@pytest.fixture(scope="session")
def critical_run(critical_spec):
    return solve_least_energy(critical_spec, SolverConfig(seed=0), CRITICAL_GRID)


@pytest.fixture(scope="session")
def coupled_run(coupled_spec):
    return solve_least_energy(coupled_spec, SolverConfig(seed=0), CUBIC_GRID)


@pytest.fixture(scope="session")
def cubic_oracle(cubic_spec):
    return ground_state(cubic_spec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------------------
# one line per acceptance criterion at the end of the run

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__.rsplit(".", 1)[-1] != "test_acceptance":
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE[item.name] = (doc, rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split("_")[2]) if s.split("_")[2].isdigit() else 0):
        doc, outcome = _ACCEPTANCE[name]
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {doc}")
