import pytest

_ACCEPTANCE = []


class AcceptanceLog:
    def record(self, criterion, ok, detail=""):
        _ACCEPTANCE.append((criterion, bool(ok), detail))
        return ok


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}")
