import pytest

_RESULTS = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(k, passed, detail)``; returns ``passed``."""

    def record(k, passed, detail):
        _RESULTS.append((k, bool(passed), detail))
        print(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k, passed, detail in sorted(_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
