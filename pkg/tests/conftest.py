"""Shared pytest wiring: replay acceptance verdicts after the run.

The acceptance tests record one "ACCEPTANCE nn <name>: PASS|FAIL" line
each; printing them again in the terminal summary keeps the verdicts
visible under pytest's default output capture.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
