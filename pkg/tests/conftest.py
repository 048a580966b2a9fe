import pytest

ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def criterion():
    """Run a list of named checks for one acceptance criterion and record PASS/FAIL."""

    def run(number: int, title: str, checks):
        try:
            results = list(checks())
        except Exception as exc:  # an exception is a failed criterion, not a crash
            line = f"FAIL criterion {number} ({title}): {type(exc).__name__}: {exc}"
            ACCEPTANCE_LINES[number] = line
            print(line)
            raise
        bad = [name for name, ok in results if not ok]
        status = "FAIL" if bad else "PASS"
        detail = "; ".join(bad) if bad else f"{len(results)} checks"
        line = f"{status} criterion {number} ({title}): {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert not bad, line

    return run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
