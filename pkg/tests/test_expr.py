import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzinvex.errors import ExprSyntaxError, UnknownIdentifierError
from fuzzinvex.expr import ExprFn, parse_expression
from fuzzinvex.fixtures import COUNTEREXAMPLES, FIXTURE_DIR
from fuzzinvex.problem import _logical_lines


def test_shape_function_value_at_zero():
    e = parse_expression("ln(x^2 + abs(x) + 1) + 1")
    assert e.evaluate({"x": 0.0}) == 1.0
    # oracle: math module
    assert e.evaluate({"x": 1.0}) == pytest.approx(1 + math.log(3), abs=1e-15)


def test_piecewise_g2():
    e = parse_expression("piecewise{ [-1,0]: -3*x^2; [0,1]: x }")
    assert e.evaluate({"x": -0.5}) == pytest.approx(-0.75)
    assert e.evaluate({"x": 0.5}) == pytest.approx(0.5)
    assert 0.0 in e.breakpoints()
    assert not e.is_smooth()


def test_syntax_error_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expression("x +* 2")
    assert (info.value.line, info.value.column) == (1, 3)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError, match="foo"):
        parse_expression("foo(x)")
    with pytest.raises(UnknownIdentifierError, match="y"):
        parse_expression("x + y", ("x",))


def test_precedence():
    e = parse_expression("-2^2 + 3*4/2 - 1")
    assert e.evaluate({}) == -4 + 6 - 1
    assert parse_expression("2^3^2").evaluate({}) == 2 ** 9


def test_exprfn_two_variables():
    eta = ExprFn("x - u", ("x", "u"))
    assert eta(1.0, 0.5) == 0.5
    np.testing.assert_allclose(eta(np.array([1.0, 2.0]), 0.5), [0.5, 1.5])


def _corpus():
    out = []
    for p in sorted(FIXTURE_DIR.glob("*.fop")):
        for _, st_ in _logical_lines(p.read_text()):
            if st_.startswith("fn "):
                out.append(st_.split("=", 1)[1])
            elif st_.startswith("eta("):
                out.append(st_.split("=", 1)[1])
    for c in COUNTEREXAMPLES:
        out += list(c.fns) + [c.eta] + list(c.beta or ())
    return sorted(set(out))


@pytest.mark.parametrize("src", _corpus())
def test_round_trip_fixture_corpus(src):
    e = parse_expression(src)
    assert parse_expression(str(e)) == e


_leaf = st.one_of(st.sampled_from(["x", "u"]), st.integers(0, 9).map(str),
                  st.floats(0.1, 5, allow_nan=False).map(lambda v: f"{v:.3f}"))


def _compose(children):
    binop = st.tuples(children, st.sampled_from(["+", "-", "*", "/", "^"]), children).map(
        lambda t: f"({t[0]}) {t[1]} ({t[2]})")
    call = st.tuples(st.sampled_from(["abs", "exp", "ln"]), children).map(lambda t: f"{t[0]}({t[1]})")
    call2 = st.tuples(st.sampled_from(["min", "max"]), children, children).map(
        lambda t: f"{t[0]}({t[1]}, {t[2]})")
    return st.one_of(binop, call, call2, children.map(lambda c: f"-({c})"))


exprs = st.recursive(_leaf, _compose, max_leaves=8)


@given(exprs)
def test_round_trip_random(src):
    e = parse_expression(src)
    again = parse_expression(str(e))
    assert again == e


@given(st.sampled_from(["x^3 + x", "exp(x) * x", "ln(x^2 + 1)", "x^2 - 5*x", "3*x - exp(x)"]), st.floats(-2, 2))
def test_derivative_matches_central_difference(src, x):
    e = parse_expression(src)
    d = e.diff("x")
    h = 1e-6
    fd = (e.evaluate({"x": x + h}) - e.evaluate({"x": x - h})) / (2 * h)
    assert d.evaluate({"x": x}) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_min_has_no_symbolic_derivative():
    with pytest.raises(ValueError):
        parse_expression("min(x, 1)").diff("x")
