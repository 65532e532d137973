import pytest

from gibbscert import ModelParams, compute_constants

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def p4():
    return ModelParams(n=4, x=2.0, b=3.0, a=(1, 2, 3, 4, 5))


@pytest.fixture(scope="session")
def p3():
    return ModelParams(n=3, x=1.0, b=2.0, a=(1, 2, 3, 4))


@pytest.fixture(scope="session")
def table4(p4):
    return compute_constants(p4)


@pytest.fixture(scope="session")
def table3(p3):
    return compute_constants(p3)
