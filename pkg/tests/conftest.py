import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# criterion lines reported by the acceptance suite, in insertion order
CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA):
        passed, text = CRITERIA[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {key}: {text}")
