"""Shared pytest hooks.

Acceptance checks record one verdict line each; the lines are repeated in the
terminal summary so they show up regardless of output capturing.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
