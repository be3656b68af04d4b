import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Recorder for one acceptance line: ``criterion(label, ok, detail)``."""
    seen = []

    def record(label, ok, detail):
        seen.append(label)
        _LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        print(_LINES[-1])
        return ok

    yield record
    if not seen:
        _LINES.append(f"FAIL  {request.node.name}: raised before reporting")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
