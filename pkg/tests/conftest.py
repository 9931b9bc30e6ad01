"""Shared pytest hooks.

test_acceptance appends one PASS/FAIL line per criterion here; the summary
hook prints them as a block so a plain `pytest` run ends with the per-
criterion verdict even when individual test output is captured.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
