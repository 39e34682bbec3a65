"""Shared fixtures.  The expensive objects (connection results, fans) are
session-scoped so the module tests and the acceptance suite reuse them."""
import pytest

from p2mu import connection, tritronquee
from p2mu.specfun import ProblemSpec

ACCEPTANCE_LINES = []


def record_acceptance(number, passed, text):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {text}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def spec1():
    return ProblemSpec(1)


@pytest.fixture(scope="session")
def spec3():
    return ProblemSpec(3)


@pytest.fixture(scope="session")
def hm1(spec1):
    return connection.find_kstar(spec1, x_left=-10.0)


@pytest.fixture(scope="session")
def hm3(spec3):
    return connection.find_kstar(spec3, x_left=-6.0)


@pytest.fixture(scope="session")
def fan1(spec1):
    return tritronquee.build_tritronquee(spec1)


@pytest.fixture(scope="session")
def fan3(spec3):
    return tritronquee.build_tritronquee(spec3)


@pytest.fixture(scope="session")
def stokes1(spec1):
    return tritronquee.stokes_gap(spec1)


@pytest.fixture(scope="session")
def stokes3(spec3):
    return tritronquee.stokes_gap(spec3)
