import pytest

_LINES = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion and echo it immediately."""
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(number, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + (f" ({detail})" if detail else "")
        _LINES.append(line)
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
        assert ok, line

    return emit


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
