import pytest

from saddleroot.expratio import PairedSample

FX1_PAIRS = [(1.2, 0.8), (0.6, 1.9), (2.1, 1.3), (0.9, 2.4)]

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fx1():
    return PairedSample.from_pairs(FX1_PAIRS)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
