import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _collect_acceptance_lines(request):
    """Gather the CRITERION lines so they are listed in the terminal summary."""
    if request.node.module.__name__ != "test_acceptance":
        yield
        return
    capsys = request.getfixturevalue("capsys")
    yield
    out = capsys.readouterr().out
    _ACCEPTANCE_LINES.extend(line for line in out.splitlines() if line.startswith("CRITERION"))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
