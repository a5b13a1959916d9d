import pytest

# (criterion id, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_log():
    def log(cid: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append((cid, passed, detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {cid}: {detail}")

    return log


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda r: int(r[0].split()[0])):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {cid}: {detail}")
