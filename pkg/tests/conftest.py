import pytest

_RESULTS = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion for the end-of-run summary."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        _RESULTS[number] = (title, bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, passed, detail = _RESULTS[number]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number} [{status}] {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
