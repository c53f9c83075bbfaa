import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# Filled by tests/test_acceptance.py: criterion -> (passed, detail).
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.lstrip("C"))):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:<4} {'PASS' if passed else 'FAIL'}  {detail}")
