import pytest

from dispersion.portgraph import from_edge_list

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def p2():
    return from_edge_list(2, [(0, 0, 1, 0)])


@pytest.fixture
def p3():
    return from_edge_list(3, [(0, 0, 1, 0), (1, 1, 2, 0)])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
