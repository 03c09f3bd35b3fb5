"""Acceptance matrix: one test per criterion, each printing its pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines,
or `gscopt bench` for the same table from the CLI.
"""

import pytest

from gscopt import acceptance


@pytest.mark.parametrize("cid", sorted(acceptance.CRITERIA))
def test_criterion(cid):
    result = acceptance.CRITERIA[cid]()
    print(result.line())
    assert result.passed, result.line()
    assert result.runtime < result.limit
