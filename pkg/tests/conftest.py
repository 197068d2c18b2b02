import re

import pytest

_RESULTS = {}
_CRASHED = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict, print it, and fail the test if it is negative."""
    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _RESULTS[number] = line
        print(line)
        assert ok, line
    return report


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if m and report.failed:
        _CRASHED[int(m.group(1))] = report.nodeid


def pytest_terminal_summary(terminalreporter):
    numbers = sorted(set(_RESULTS) | set(_CRASHED))
    if numbers:
        terminalreporter.section("acceptance criteria")
        for n in numbers:
            terminalreporter.write_line(_RESULTS.get(n, f"criterion {n:>2}: FAIL  error in {_CRASHED.get(n)}"))
