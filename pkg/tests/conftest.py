import pytest

from bicheck import fixtures


@pytest.fixture(scope="session")
def queues():
    return fixtures.load("queues.bi")


@pytest.fixture(scope="session")
def queues_rbq():
    return fixtures.load("queues_global_rbq.bi")


@pytest.fixture(scope="session")
def queues_bq():
    return fixtures.load("queues_global_bq.bi")


@pytest.fixture(scope="session")
def counters():
    return fixtures.load("counters.bi")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
