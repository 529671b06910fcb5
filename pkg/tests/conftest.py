import os
import re
import sys

sys.path.insert(0, os.path.dirname(__file__))

# Filled by test_acceptance.py with lines like "criterion 6a  PASS  ...".
ACCEPTANCE_LINES: list = []


def _criterion_key(line: str):
    m = re.match(r"criterion (\d+)(\w*)", line)
    return (int(m.group(1)), m.group(2)) if m else (0, line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=_criterion_key):
            terminalreporter.write_line(line)
