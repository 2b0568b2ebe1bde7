import sys
from pathlib import Path

import pytest

from provcq import fixtures

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def db1():
    return fixtures.load_db("db1")


@pytest.fixture(scope="session")
def db2():
    return fixtures.load_db("db2")


@pytest.fixture(scope="session")
def db3():
    return fixtures.load_db("db3")


@pytest.fixture(scope="session")
def q1():
    return fixtures.load_query("q1")


@pytest.fixture(scope="session")
def q2():
    return fixtures.load_query("q2")


@pytest.fixture(scope="session")
def q3():
    return fixtures.load_query("q3")


@pytest.fixture(scope="session")
def q4():
    return fixtures.load_query("q4")


_CRITERIA: dict[str, bool] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[1].split("[")[0]
    if report.when == "call" or report.failed:
        _CRITERIA[name] = _CRITERIA.get(name, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        label = name.replace("test_criterion_", "criterion ").replace("_", " ", 1)
        terminalreporter.write_line(f"{'PASS' if _CRITERIA[name] else 'FAIL'}  {label}")
