import pytest

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Store a PASS/FAIL line for the acceptance summary."""
    def record(number, passed, detail):
        ACCEPTANCE[number] = (passed, detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
