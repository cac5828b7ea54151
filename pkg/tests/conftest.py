"""Shared fixtures and the acceptance summary printed at the end of a run."""

import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for index in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[index])


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)
