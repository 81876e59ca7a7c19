import numpy as np
import pytest

from pinncert.problem import registry_get


@pytest.fixture
def ex51():
    return registry_get("example51", {"k": 7, "lambda": 7, "eps": 1})


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
