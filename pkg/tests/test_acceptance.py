"""Acceptance gate: every criterion at its contract parameters.

Prints one pass/fail line per criterion (outside pytest's capture, so
the lines land on the console under any capture mode). The same checks
run via ``ealab verify``.
"""

import pytest

from ealab.acceptance import criterion_numbers, run_criterion


@pytest.mark.parametrize("number", criterion_numbers())
def test_criterion(number, capfd):
    result = run_criterion(number, profile="full")
    with capfd.disabled():
        print(result.line(), flush=True)
    assert result.passed, result.line()
