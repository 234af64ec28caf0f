import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# Acceptance gate lines, filled in by test_acceptance.py
GATES = {}


def pytest_terminal_summary(terminalreporter):
    if not GATES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(GATES):
        terminalreporter.write_line(GATES[n])
