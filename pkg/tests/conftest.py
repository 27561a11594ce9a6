from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sensorstream.model import SensorLog  # noqa: E402
from sensorstream.xes_io import read_log  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
LISTINGS = tuple(range(1, 11))

# (criterion, verdict, detail) lines collected by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def fixture_path(n: int) -> Path:
    return FIXTURES / f"listing{n}.xes"


def load_listing(n: int) -> SensorLog:
    log, findings = read_log(fixture_path(n))
    assert not findings, findings
    return log


@pytest.fixture
def listing():
    return load_listing


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
