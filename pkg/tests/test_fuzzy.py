import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzinvex.errors import ModelError
from fuzzinvex.fuzzy import (FuzzyObjective, Interval, alpha_cut, eval_endpoints, interval_sub_cross,
                             interval_sub_hukuhara, make_fuzzy, membership, triangular)
from fuzzinvex.nonsmooth import PiecewiseFn

TWO = [(0, 0), (1, 0.75), (2, 1), (3, 0.75), (4, 0)]


@pytest.fixture(scope="module")
def objective():
    s = PiecewiseFn.from_expr("ln(x^2 + abs(x) + 1) + 1", knots=[0])
    return FuzzyObjective(make_fuzzy(TWO), s, triangular(0, 1, 2))


def test_make_fuzzy_examples():
    u = make_fuzzy([(1, 0), (3, 1), (5, 0)])
    assert u.xs.tolist() == [1, 3, 5]
    two = make_fuzzy(TWO)
    assert membership(two, 1.0) == membership(two, 3.0) == 0.75
    with pytest.raises(ValueError, match="increasing"):
        make_fuzzy([(0, 0), (1, 1), (0.5, 0)])


@pytest.mark.parametrize("knots", [
    [(0, 0), (1, 0.5), (2, 0)],                    # not normal
    [(0, 0.2), (1, 1), (2, 0)],                    # support not closed
    [(0, 0), (1, 1), (2, 0.3), (3, 0.8), (4, 0)],  # not quasi-concave
    [(0, 0), (1, 1.5), (2, 0)],                    # membership above 1
])
def test_make_fuzzy_rejects(knots):
    with pytest.raises(ValueError):
        make_fuzzy(knots)


def test_alpha_cut_triangular():
    u = triangular(1, 3, 5)
    a = 0.6
    # closed form [(1-a)u1 + a u2, (1-a)u3 + a u2]
    lo, hi = (1 - a) * 1 + a * 3, (1 - a) * 5 + a * 3
    c = alpha_cut(u, a)
    assert (c.lo, c.hi) == pytest.approx((lo, hi), abs=1e-15)
    assert (c.lo, c.hi) == pytest.approx((2.2, 3.8))
    assert tuple(alpha_cut(u, 1.0)) == (3.0, 3.0)


def test_alpha_cut_two():
    two = make_fuzzy(TWO)
    assert tuple(alpha_cut(two, 0.75)) == (1.0, 3.0)
    assert tuple(alpha_cut(two, 1.0)) == (2.0, 2.0)
    assert tuple(alpha_cut(two, 0.0)) == (0.0, 4.0)
    for a in np.linspace(0, 1, 21):
        c = alpha_cut(two, a)
        if a <= 0.75:
            assert (c.lo, c.hi) == pytest.approx((a / 0.75, (3 - a) / 0.75), abs=1e-12)
        else:
            assert (c.lo, c.hi) == pytest.approx((1 + 4 * (a - 0.75), 3 - 4 * (a - 0.75)), abs=1e-12)


def test_alpha_cut_crisp():
    assert tuple(alpha_cut(1.0, 0.3)) == (1.0, 1.0)


def test_interval_sub_cross_examples():
    assert tuple(interval_sub_cross(Interval(0, 4), Interval(0, 2))) == (-2, 4)
    assert tuple(interval_sub_cross(Interval(3, 3), Interval(1, 1))) == (2, 2)
    assert tuple(interval_sub_cross(Interval(2, 5), Interval(0, 0))) == (2, 5)


def test_hukuhara():
    assert tuple(interval_sub_hukuhara(Interval(0, 4), Interval(0, 2))) == (0, 2)
    assert interval_sub_hukuhara(Interval(0, 1), Interval(0, 2)) is None


def test_interval_invariant():
    with pytest.raises(ValueError):
        Interval(2, 1)


def test_eval_endpoints_examples(objective):
    assert tuple(eval_endpoints(objective, 0.0, 0.0)) == (-2.0, 4.0)
    assert tuple(eval_endpoints(objective, 0.0, 1.0)) == (1.0, 1.0)
    # direct evaluation: 2 * (1 + ln 3) - 1
    v = 2 * (1 + math.log(3)) - 1
    assert tuple(eval_endpoints(objective, 1.0, 1.0)) == pytest.approx((v, v), abs=1e-12)
    assert v == pytest.approx(3.197, abs=1e-3)


def test_hukuhara_flag(objective):
    d = objective.hukuhara_differs(0.0, 0.0)
    assert d == {"x": 0.0, "alpha": 0.0, "cross": [-2.0, 4.0], "hukuhara": [0.0, 2.0]}
    assert objective.hukuhara_differs(0.0, 1.0) is None


def test_endpoint_inversion_reported():
    neg = PiecewiseFn.from_expr("x - 1")
    obj = FuzzyObjective(make_fuzzy(TWO), neg, 0.0)
    with pytest.raises(ModelError, match="x=0"):
        obj.endpoint_arrays(np.array([0.0, 2.0]), 0.0)


@st.composite
def fuzzy_numbers(draw):
    n_left = draw(st.integers(1, 3))
    n_right = draw(st.integers(1, 3))
    steps = draw(st.lists(st.floats(0.05, 2), min_size=n_left + n_right + 1, max_size=n_left + n_right + 1))
    xs = np.cumsum([draw(st.floats(-3, 3))] + steps)
    up = sorted(draw(st.lists(st.floats(0.01, 0.99), min_size=n_left - 1, max_size=n_left - 1)))
    down = sorted(draw(st.lists(st.floats(0.01, 0.99), min_size=n_right - 1, max_size=n_right - 1)),
                  reverse=True)
    core = [1.0] * (len(xs) - len(up) - len(down) - 2)
    mus = [0.0] + up + core + down + [0.0]
    return make_fuzzy(list(zip(xs.tolist(), mus)))


@given(fuzzy_numbers(), st.floats(0, 1), st.floats(0, 1))
def test_nestedness(u, a1, a2):
    lo, hi = sorted((a1, a2))
    assert alpha_cut(u, hi).issubset(alpha_cut(u, lo), tol=1e-12)


@given(fuzzy_numbers(), st.floats(0.01, 1))
def test_reconstruction(u, a):
    c = alpha_cut(u, a)
    xs = np.linspace(u.xs[0] - 0.5, u.xs[-1] + 0.5, 401)
    mu = membership(u, xs)
    inside = (xs >= c.lo - 1e-12) & (xs <= c.hi + 1e-12)
    near = (np.abs(xs - c.lo) <= 1e-9) | (np.abs(xs - c.hi) <= 1e-9)
    assert np.all((mu >= a - 1e-12)[~near] == inside[~near])


@given(st.floats(0, 5), st.floats(0, 1))
def test_endpoint_order(x, a):
    s = PiecewiseFn.from_expr("ln(x^2 + abs(x) + 1) + 1", knots=[0])
    obj = FuzzyObjective(make_fuzzy(TWO), s, triangular(0, 1, 2))
    iv = eval_endpoints(obj, x, a)
    assert iv.lo <= iv.hi
