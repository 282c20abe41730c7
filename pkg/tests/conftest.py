import pytest

from revelio.fixtures import figure1_net, figure2_net

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def fig1():
    return figure1_net()


@pytest.fixture(scope="session")
def fig2():
    return figure2_net()


@pytest.fixture(scope="session")
def ev(fig2):
    """Event id by name on the figure-2 net."""
    return {e.name: e.id for e in fig2.events}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
