import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mabo.box import Box  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def unit_box():
    return Box((0.0,), (1.0,))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
