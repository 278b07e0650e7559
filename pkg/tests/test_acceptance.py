"""The twelve acceptance criteria, one test each.

Every test prints a PASS/FAIL line with its runtime; the lines are repeated
in the terminal summary (see ``pytest_terminal_summary`` below).
"""
import json

import pytest

from cpslab.acceptance import CRITERIA, format_line

LINES = []


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{c.number:02d}_{c.__name__}" for c in CRITERIA])
def test_criterion(check):
    result = check()
    line = format_line(result)
    LINES.append(line)
    print(line)
    assert result.passed, line + "\n" + json.dumps(result.details, indent=2, default=str)
