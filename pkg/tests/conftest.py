import re

import pytest

_RESULTS: dict = {}


def _order(key: str):
    num, suffix = re.match(r"(\d+)(\w*)", key).groups()
    return int(num), suffix


@pytest.fixture
def record(capsys):
    """Store and print one verdict line for an acceptance criterion."""

    def _record(criterion: str, status: str, detail: str) -> None:
        _RESULTS[criterion] = (status, detail)
        with capsys.disabled():
            print(f"\n[{status}] criterion {criterion}: {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=_order):
        status, detail = _RESULTS[key]
        terminalreporter.write_line(f"[{status}] {key:<3} {detail}")
