import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from optpredict.cli import ingest_csv  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
GBM_FIXTURE = FIXTURES / "gbm_3000_seed42.csv"

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def gbm_fixture_path():
    return GBM_FIXTURE


@pytest.fixture(scope="session")
def gbm_fixture():
    return ingest_csv(str(GBM_FIXTURE))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
