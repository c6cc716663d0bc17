"""Acceptance criteria at their stated tolerances and sample counts.

One test per criterion; each prints its pass/fail line (run pytest with -s
to see them live).  The suite is seeded and deterministic; full sample
counts make this the slow part of the test run.
"""

import os

import pytest

from hmclab.acceptance import CRITERIA, DEFAULT_SEED, run_criterion

LEVEL = os.environ.get("HMCLAB_ACCEPTANCE_LEVEL", "full")


@pytest.mark.acceptance
@pytest.mark.parametrize("index", sorted(CRITERIA))
def test_criterion(index):
    result = run_criterion(index, seed=DEFAULT_SEED, level=LEVEL)
    print()
    print(result.summary())
    for line in result.lines:
        print(f"    {line}")
    assert result.passed, "\n".join([result.summary(), *result.lines])
