"""The twelve acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line.  The checks themselves live in
``kinetic_clt.acceptance`` so that ``kinetic-clt selftest`` runs the same code.
"""

import pytest

from kinetic_clt.acceptance import CHECKS, run_check


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number, capsys):
    res = run_check(number)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.summary
