import pytest


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def report(request):
    """Record and print one pass/fail line for an acceptance criterion."""
    def _report(n: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        print(line)
        request.config._acceptance_lines.append(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
