import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    def record(number, title, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{'ok' if passed else 'FAIL'}: {text}" for text, passed in checks)
        ACCEPTANCE_LINES.append(f"criterion {number} {'PASS' if ok else 'FAIL'} - {title} ({detail})")
        print(ACCEPTANCE_LINES[-1])
        assert ok, ACCEPTANCE_LINES[-1]
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
