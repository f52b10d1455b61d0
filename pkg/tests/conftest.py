import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from protoweave.corpus import load_corpus  # noqa: E402

ACCEPTANCE_LINES: dict = {}


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
