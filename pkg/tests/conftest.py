import pytest
from hypothesis import HealthCheck, settings

from ideonash import presets
from ideonash.solver1d import solve_nash

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ex1():
    return presets.ex1()


@pytest.fixture(scope="session")
def ex1_result(ex1):
    return solve_nash(ex1)
