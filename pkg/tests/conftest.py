import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the acceptance summary, then assert (``check.skip`` records SKIP)."""

    def check(number, title, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {number:>2}: {title}"
        if detail:
            line += f" -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    def skip(number, title, reason):
        line = f"[SKIP] criterion {number:>2}: {title} -- {reason}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        pytest.skip(reason)

    check.skip = skip
    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
