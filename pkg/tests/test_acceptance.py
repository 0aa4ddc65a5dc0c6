"""Full-scale acceptance run: one PASS/FAIL line per criterion, at the stated tolerances."""
import pytest

from aqtree.acceptance import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = CRITERIA[number]()
    with capsys.disabled():
        print(f"\nACCEPTANCE {'PASS' if res.passed else 'FAIL'} {res.line()}")
    assert res.passed, res.line()
