import os
import sys

sys.path.insert(0, os.path.dirname(__file__))


def pytest_terminal_summary(terminalreporter):
    import acc_report

    if acc_report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acc_report.LINES):
            terminalreporter.write_line(line)
