"""Run the acceptance suite and print one PASS/FAIL line per criterion.

    python scripts/acceptance_report.py [extra pytest args]
"""

import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    tests = Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"
    sys.exit(pytest.main([str(tests), "-q", *sys.argv[1:]]))
