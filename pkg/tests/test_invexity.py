import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzinvex.errors import ModelError
from fuzzinvex.expr import ExprFn
from fuzzinvex.fixtures import COUNTEREXAMPLES
from fuzzinvex.invexity import (Verdict, Witness, certify, certify_scalar, certify_vector, constant_beta,
                                corollary_beta, pair_grid, pair_list)
from fuzzinvex.nonsmooth import PiecewiseFn, contains_zero

X_U = ExprFn("x - u", ("x", "u"))


def fn(src, knots=()):
    return PiecewiseFn.from_expr(src, knots=knots)


def find(v: Verdict, x, u):
    return [w for w in v.witnesses if abs(w.x[0] - x) < 1e-12 and abs(w.u[0] - u) < 1e-12]


def test_cubic_plus_linear_tight_certificate():
    f = fn("x^3 + x")
    eta = lambda x, u: (x ** 3 + x - u ** 3 - u) / (3 * u ** 2 + 1)
    xs = np.linspace(-2, 2, 41)
    v = certify_scalar("invex", f, eta, pair_grid(xs))
    assert v.passed and v.checked_pairs == 41 * 41
    assert v.tight == 41 * 41  # equality on every pair
    assert v.label == "pass (sampled)"


def test_negative_cube_not_invex():
    v = certify_scalar("invex", fn("-x^3"), X_U, pair_grid(np.linspace(-1, 1, 21)))
    assert not v.passed and v.label == "fail"
    (w,) = find(v, 1.0, 0.0)
    # f(1) - f(0) = -1 against xi*eta = 0
    assert (w.lhs, w.rhs) == (-1.0, 0.0)


def test_square_minus_cube_quasi_witness():
    z = lambda x: x ** 2 - x ** 3
    # oracle first: z(1) = 0 <= z(0.5) = 0.125, z'(0.5) * (1 - 0.5) = 0.125 > 0
    assert z(1.0) <= z(0.5) and (2 * 0.5 - 3 * 0.25) * 0.5 == 0.125
    v = certify_scalar("quasiinvex", fn("x^2 - x^3"), X_U, pair_grid(np.linspace(-1, 2, 301)))
    (w,) = find(v, 1.0, 0.5)
    assert w.lhs == pytest.approx(z(1.0) - z(0.5)) and w.rhs == pytest.approx(0.125)
    assert z(2 / 3) == pytest.approx(0.148, abs=1e-3)


def test_linear_minus_exp_pseudo_witness():
    u = math.log(3)
    v = certify_scalar("pseudoinvex", fn("3*x - exp(x)"), X_U, pair_list([(0.0, u)]))
    (w,) = v.witnesses
    # f'(ln 3) = 0 so the antecedent holds; z(0) = -1 < z(ln 3) = 3 ln 3 - 3
    assert abs(w.lhs) < 1e-12
    assert w.rhs == pytest.approx(-1 - (3 * u - 3))
    assert 3 * u - 3 == pytest.approx(0.296, abs=1e-3)


def test_cubic_pair_vector():
    F = [fn("-x^3"), fn("-x")]
    pairs = pair_grid(np.linspace(-2, 2, 81))
    assert certify_vector("v_pseudoinvex", F, X_U, None, pairs).passed
    assert certify_vector("v_quasiinvex", F, X_U, None, pairs).passed
    v = certify_vector("v_invex", F, X_U, None, pairs)
    assert not v.passed
    assert all("component 1" in w.note for w in v.witnesses)


PW1 = [fn("piecewise{ [-1,0]: -6*x^2; [0,1]: x }"), fn("piecewise{ [-1,0]: 7*x^2 + 9*x^6; [0,1]: x }")]
PW2 = [fn("piecewise{ [-1,0]: x^2; [0,1]: x }"), fn("piecewise{ [-1,0]: -3*x^2; [0,1]: x }")]
BETA = [ExprFn("x^2 + 1", ("x", "u")), ExprFn("u^2 + 1", ("x", "u"))]


def test_first_piecewise_pair():
    r = -math.sqrt(1 / 3)
    xs = np.append(np.linspace(-1, 1, 201), r)
    eta = ExprFn("1 - 2*x^2 + u", ("x", "u"))
    pairs = pair_grid(xs, [0.0])
    assert certify_vector("v_pseudoinvex", PW1, eta, BETA, pairs).passed
    v = certify_vector("v_quasiinvex", PW1, eta, BETA, pairs)
    (w,) = find(v, r, 0.0)
    # (xi1 + xi2) * eta(r, 0) with xi = (1, 1): 2 * (1 - 2/3)
    assert w.xi == (1.0, 1.0) and w.rhs == pytest.approx(2 / 3)


def test_second_piecewise_pair():
    eta = ExprFn("x^2 - 1 + u", ("x", "u"))
    pairs = pair_grid(np.linspace(-1, 1, 201), [0.0])
    assert certify_vector("v_quasiinvex", PW2, eta, BETA, pairs).passed
    v = certify_vector("v_pseudoinvex", PW2, eta, BETA, pairs)
    assert find(v, -1.0, 0.0)
    # existential reading: only x = -1 makes min(xi1 + xi2) * eta >= 0
    ve = certify_vector("v_pseudoinvex", PW2, eta, BETA, pairs, reading="existential")
    assert [w.x[0] for w in ve.witnesses] == [-1.0]
    assert ve.reading == "existential"


def test_counterexample_matrix():
    got = {c.name: c.run().passed for c in COUNTEREXAMPLES}
    assert got == {c.name: c.expected for c in COUNTEREXAMPLES}


def test_eta_failure_names_pair():
    eta = ExprFn("ln(x) - u", ("x", "u"))
    with pytest.raises(ModelError, match="x=-1"):
        certify_scalar("invex", fn("x^2"), eta, pair_grid([-1.0, 1.0], [0.5]))


def test_nonpositive_beta_rejected():
    with pytest.raises(ModelError, match="beta_2"):
        certify_vector("v_invex", [fn("x^2"), fn("x")], X_U, [constant_beta(1), constant_beta(0)],
                       pair_grid([0.0, 1.0]))


def test_unknown_property():
    with pytest.raises(ValueError):
        certify_scalar("convex", fn("x"), X_U, pair_grid([0.0]))


def test_verdict_invariant():
    with pytest.raises(ValueError):
        Verdict("invex", True, [Witness((0.0,), (1.0,))])
    with pytest.raises(ValueError):
        Verdict("invex", False, [])


def test_vacuous_pairs_counted():
    v = certify_scalar("quasiinvex", fn("0*x + 1"), lambda x, u: 0 * x, pair_grid([0.0, 1.0]))
    assert v.passed and v.vacuous == 4


witness_st = st.builds(lambda x, u: Witness((x,), (u,)), st.integers(-3, 3).map(float),
                       st.integers(-3, 3).map(float))
verdict_st = st.lists(witness_st, max_size=4).map(lambda ws: Verdict("invex", not ws, ws, len(ws) + 1))


@given(verdict_st, verdict_st, verdict_st)
def test_merge_associative(a, b, c):
    left, right = (a + b) + c, a + (b + c)
    assert left.witnesses == right.witnesses
    assert left.checked_pairs == right.checked_pairs and left.passed == right.passed


# -- property families ----------------------------------------------------------

coef = st.floats(-2, 2).map(lambda v: round(v, 3))


def _family(a, b, c, d):
    return fn(f"({a})*x^2 + ({b})*x^3 + ({abs(c)})*abs(x) + ({d})*x", knots=[0])


@given(coef, coef, coef, coef)
def test_invex_implies_pseudo_and_quasi(a, b, c, d):
    f = _family(a, b, c, d)
    pairs = pair_grid(np.linspace(-1.5, 1.5, 31))
    if certify_scalar("invex", f, X_U, pairs).passed:
        assert certify_scalar("pseudoinvex", f, X_U, pairs).passed
        assert certify_scalar("quasiinvex", f, X_U, pairs).passed


@given(coef, coef, coef, coef, st.floats(1, 3), st.floats(1, 3))
def test_v_invex_implies_componentwise(a, b, c, d, b1, b2):
    F = [_family(a, b, c, d), _family(d, 0, a, b)]
    pairs = pair_grid(np.linspace(-1.5, 1.5, 31))
    beta = [constant_beta(b1), constant_beta(b2)]
    if certify_vector("v_invex", F, X_U, beta, pairs).passed:
        for f in F:
            assert certify_scalar("pseudoinvex", f, X_U, pairs).passed
            assert certify_scalar("quasiinvex", f, X_U, pairs).passed


PSEUDO_FIXTURES = ["x^2", "x^3 + x", "exp(x)", "-exp(-x)", "abs(x) + x^2", "3*x", "x^2 + 2*x"]


@pytest.mark.parametrize("src", PSEUDO_FIXTURES)
def test_corollary_beta_makes_v_invex(src):
    f = fn(src, knots=[0] if "abs" in src else [])
    pairs = pair_grid(np.linspace(-1.5, 1.5, 61))
    assert certify_scalar("pseudoinvex", f, X_U, pairs).passed
    F = [f, fn("x^2")]
    assert certify_vector("v_invex", F, X_U, corollary_beta(F, X_U), pairs).passed


def test_corollary_beta_gap_at_level_pairs():
    # pseudoinvex, yet f(x) = f(u) with f°(u;eta) > 0 cannot be scaled by beta > 0
    f = fn("x^2")
    eta = lambda x, u: np.where(np.isclose(x * x, u * u), 1.0, x - u)
    pairs = pair_grid(np.linspace(-1, 1, 21))
    assert certify_scalar("pseudoinvex", f, eta, pairs).passed
    v = certify_vector("v_invex", [f], eta, corollary_beta([f], eta), pairs)
    assert not v.passed
    assert all(abs(w.lhs) < 1e-12 and w.rhs > 0 for w in v.witnesses)


INVEX_FIXTURES = [("x^2", X_U), ("abs(x)", X_U), ("x^2 - 5*x", X_U), ("abs(x - 0.3) + x^2", X_U),
                  ("x^3 + x", lambda x, u: (x ** 3 + x - u ** 3 - u) / (3 * u ** 2 + 1))]


@pytest.mark.parametrize("src,eta", INVEX_FIXTURES)
def test_stationary_points_are_global_minima(src, eta):
    knots = [0.3] if "0.3" in src else ([0] if "abs" in src else [])
    f = fn(src, knots=knots)
    xs = np.union1d(np.linspace(-2, 3, 101), knots)
    assert certify_scalar("invex", f, eta, pair_grid(xs)).passed
    fmin = float(np.min(f(xs)))
    for u in xs:
        if contains_zero(f.subdiff(u)):
            assert f(u) <= fmin + 1e-9


LLC = ["x^2", "-x^3", "abs(x)", "3*x - exp(x)", "x^2 - x^3", "ln(x^2 + abs(x) + 1) + 1",
       "piecewise{ [-2,0]: -3*x^2; [0,2]: x }", "piecewise{ [-1,0]: 0; [0,1]: -x; [1,3]: x - 2 }"]


@pytest.mark.parametrize("src", LLC)
def test_trivial_quasiinvexity(src):
    f = fn(src, knots=[0] if "abs" in src else [])
    lo, hi = f.domain
    xs = np.linspace(max(lo, -2), min(hi, 2), 41)
    assert certify_scalar("quasiinvex", f, lambda x, u: 0 * x, pair_grid(xs)).passed


def test_certify_dispatch():
    pairs = pair_grid(np.linspace(-1, 1, 11))
    assert certify("invex", fn("x^2"), X_U, pairs).passed
    assert certify("v_invex", [fn("x^2"), fn("abs(x)", [0])], X_U, pairs).passed
