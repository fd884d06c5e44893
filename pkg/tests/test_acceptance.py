"""The eleven acceptance criteria, one test each, at their stated tolerances.

Run with ``-s`` to see the pass/fail line of every criterion; a summary is
also printed at the end of the module.
"""

import pytest

from pearcey.acceptance import CHECKS, run_check

_lines: dict[int, str] = {}


@pytest.fixture(scope="module", autouse=True)
def summary():
    yield
    print("\nacceptance summary")
    for number in sorted(_lines):
        print(_lines[number])


@pytest.mark.parametrize("number", sorted(CHECKS), ids=[f"{n:02d}-{CHECKS[n][0].replace(' ', '-')}" for n in sorted(CHECKS)])
def test_criterion(number):
    result = run_check(number)
    _lines[number] = result.line()
    print(result.line())
    assert result.passed, result.line()
