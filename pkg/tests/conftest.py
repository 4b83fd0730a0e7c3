from __future__ import annotations

import pytest

from morsesmale.pipeline import run_analyze

_REPORTS: dict = {}


@pytest.fixture(scope="session")
def report():
    """Analysis reports of catalog entries, computed once per session."""

    def get(name: str):
        if name not in _REPORTS:
            _REPORTS[name] = run_analyze(name)
        return _REPORTS[name]

    return get


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
