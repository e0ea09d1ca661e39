"""Shared fixtures and the acceptance-summary reporter."""

from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# outcome per acceptance criterion, filled by pytest_runtest_logreport
ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def task1_cases() -> Path:
    return FIXTURES / "task1" / "cases"


@pytest.fixture
def task1_labels() -> Path:
    return FIXTURES / "task1" / "labels.json"


@pytest.fixture
def task2_dir() -> Path:
    return FIXTURES / "task2"


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::", 1)[-1]
    if report.when == "setup" and report.skipped:
        ACCEPTANCE_RESULTS[name] = "SKIP"
    elif report.when in ("setup", "call") and report.failed:
        ACCEPTANCE_RESULTS[name] = "FAIL"
    elif report.when == "call" and report.passed:
        ACCEPTANCE_RESULTS[name] = "PASS"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{ACCEPTANCE_RESULTS[name]}: {name}")
