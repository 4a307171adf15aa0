from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kakeyalab.algebra import (
    MPoly,
    as_fraction,
    count_roots_open,
    isolate_roots,
    monomials_up_to,
    sign_at,
    upoly_eval,
    upoly_mul,
    veronese_dimension,
)


def test_as_fraction_is_exact():
    assert as_fraction(0.1) == F(0.1)
    assert as_fraction("3/7") == F(3, 7)


def test_poly_arithmetic_and_degree():
    x, y = MPoly.variable(2, 0), MPoly.variable(2, 1)
    p = (x + y) ** 2 - x * x - 2 * x * y
    assert p == y * y
    assert p.degree == 2
    assert MPoly(2).degree == -1 and MPoly(2).is_zero


def test_poly_float_and_exact_evaluation_agree():
    x, y = MPoly.variable(2, 0), MPoly.variable(2, 1)
    p = x ** 3 - F(1, 3) * x * y + 2
    pts = np.array([[0.5, -1.0], [2.0, 0.25]])
    exact = [float(p.evaluate_exact(q)) for q in pts.tolist()]
    assert np.allclose(p(pts), exact)


def test_gradient():
    x, y = MPoly.variable(2, 0), MPoly.variable(2, 1)
    gx, gy = (x * x * y).gradient()
    assert gx == 2 * x * y and gy == x * x


def test_json_round_trip():
    x, y = MPoly.variable(2, 0), MPoly.variable(2, 1)
    p = F(1, 3) * x * x - y + F(-5, 7)
    assert MPoly.from_json(p.to_json()) == p


def test_restrict_to_line():
    x, y = MPoly.variable(2, 0), MPoly.variable(2, 1)
    p = x * x + y * y - 1
    # (t, 0): t^2 - 1
    assert p.restrict_to_line([0, 0], [1, 0]) == [F(-1), F(0), F(1)]


def test_veronese_dimension():
    assert veronese_dimension(2, 1) == 2
    assert veronese_dimension(2, 2) == 5
    assert len(monomials_up_to(2, 3)) == 10


@pytest.mark.parametrize(
    "roots,a,b,expected",
    [
        ([F(0), F(1, 3), F(-1, 4)], -F(1, 2), F(1, 2), 3),
        ([F(1, 2), F(0)], -F(1, 2), F(1, 2), 1),  # endpoint root excluded
        ([F(1, 5), F(1, 5)], 0, 1, 1),  # double root counted once
        ([F(2)], 0, 1, 0),
    ],
)
def test_count_roots_open(roots, a, b, expected):
    p = [F(1)]
    for r in roots:
        p = upoly_mul(p, [-r, F(1)])
    assert count_roots_open(p, a, b) == expected


def test_irrational_roots_isolated():
    p = [F(-2), F(0), F(1)]  # t^2 - 2
    iv = isolate_roots(p, 0, 2, max_width=F(1, 1000))
    assert len(iv) == 1
    lo, hi = iv[0]
    assert lo < 2 ** 0.5 < hi


@settings(max_examples=60, deadline=None)
@given(st.lists(st.fractions(min_value=-1, max_value=1, max_denominator=50), min_size=1, max_size=5))
def test_root_count_matches_construction(roots):
    p = [F(1)]
    for r in roots:
        p = upoly_mul(p, [-r, F(1)])
    inside = {r for r in roots if -F(1, 2) < r < F(1, 2)}
    assert count_roots_open(p, -F(1, 2), F(1, 2)) == len(inside)


def test_sign_at_exact():
    p = [F(-1, 3), F(1)]
    assert sign_at(p, F(1, 3)) == 0
    assert sign_at(p, F(1, 2)) == 1
    assert upoly_eval(p, F(0)) == F(-1, 3)
