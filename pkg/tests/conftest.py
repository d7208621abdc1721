import sys

import pytest
from hypothesis import HealthCheck, settings

from fuzzinvex.fixtures import fixture_path
from fuzzinvex.problem import parse_problem

settings.register_profile("default", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ex1():
    return parse_problem(fixture_path("paper_ex1.fop"))


@pytest.fixture(scope="session")
def ex2():
    return parse_problem(fixture_path("paper_ex2.fop"))


@pytest.fixture(scope="session")
def ex3():
    return parse_problem(fixture_path("paper_ex3.fop"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
