import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """``criterion(label, ok, detail)`` records one acceptance line; the test
    asserts on the returned flags."""

    def record(label, ok, detail):
        ok = bool(ok)
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
