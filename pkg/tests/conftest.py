import pytest

# filled by test_acceptance.py: criterion number -> (title, passed, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {num}. {title}: {detail}")


@pytest.fixture
def criterion():
    def record(num, title, passed, detail):
        ACCEPTANCE[num] = (title, bool(passed), detail)
        assert passed, f"criterion {num} ({title}) failed: {detail}"

    return record
