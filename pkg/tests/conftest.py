import pytest

from osusim.engine import run
from osusim.scenarios import ScenarioParams, build_parking_lot, build_transient_scenario


@pytest.fixture(scope="session")
def transient_result():
    return run(build_transient_scenario())


@pytest.fixture(scope="session")
def parking_lot_result():
    return run(build_parking_lot(3))


@pytest.fixture(scope="session")
def short_params():
    return ScenarioParams(duration_ns=30_000_000)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    def log(criterion, ok, detail):
        _ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
