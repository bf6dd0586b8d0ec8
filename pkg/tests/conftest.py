import pytest

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record():
    """Store one line for the acceptance summary: record(label, passed, detail)."""

    def _record(label: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE.append((label, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
        return bool(passed)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
