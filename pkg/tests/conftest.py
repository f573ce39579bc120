import pytest

from funnelplatoon.config import preset
from funnelplatoon.simulator import integrate

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def scenario1_cfg():
    return preset("scenario1")


@pytest.fixture(scope="session")
def scenario2_cfg():
    return preset("scenario2")


@pytest.fixture(scope="session")
def scenario1_trace(scenario1_cfg):
    return integrate(scenario1_cfg)


@pytest.fixture(scope="session")
def scenario2_trace(scenario2_cfg):
    return integrate(scenario2_cfg)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
