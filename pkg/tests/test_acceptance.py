"""All fourteen acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal summary.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from twoweight.acceptance import CRITERIA


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 15)])
def test_criterion(criterion):
    res = criterion()
    line = res.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert res.passed, line
