"""The eleven acceptance criteria at their stated tolerances and time budgets."""

import pytest

from qmaplus import acceptance

FAST = [1, 2, 3, 5, 6, 7, 8, 9, 10, 11]


def _check(number, report_line):
    r = acceptance.CRITERIA[number]()
    report_line(r.line())
    assert r.passed, r.line()


@pytest.mark.parametrize("number", FAST)
def test_criterion(number, report_line):
    _check(number, report_line)


@pytest.mark.slow
def test_criterion_4_soundness_search(report_line):
    _check(4, report_line)
