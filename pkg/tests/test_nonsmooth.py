import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fuzzinvex.errors import DomainError, ModelError
from fuzzinvex.nonsmooth import (OracleFn, PiecewiseFn, Polytope, clarke_subdiff_1d, contains_zero,
                                 directional_derivative, distance_to_zero, estimate_limiting_gradients,
                                 limiting_gradient_history, minkowski_sum)

S = "ln(x^2 + abs(x) + 1) + 1"
G2 = "piecewise{ [-1,0]: -3*x^2; [0,1]: x }"


@pytest.fixture(scope="module")
def s():
    return PiecewiseFn.from_expr(S, knots=[0], name="s")


@pytest.fixture(scope="module")
def g2():
    return PiecewiseFn.from_expr(G2, name="g2")


def test_subdiff_shape_at_kink(s):
    P = clarke_subdiff_1d(s, 0.0)
    # one-sided oracle: d/dx ln(x^2 -/+ x + 1) at 0 is -/+1
    assert (P.lo, P.hi) == (-1.0, 1.0)


def test_subdiff_smooth_constraint():
    g = PiecewiseFn.from_expr("x^2 - 5*x")
    assert clarke_subdiff_1d(g, 0.0) == Polytope.point(-5.0)


def test_subdiff_piecewise(g2):
    P = clarke_subdiff_1d(g2, 0.0)
    assert (P.lo, P.hi) == (0.0, 1.0)


def test_outside_domain(g2):
    with pytest.raises(DomainError):
        clarke_subdiff_1d(g2, 1.5)
    with pytest.raises(DomainError):
        g2(np.array([0.0, 2.0]))


def test_undeclared_kink_rejected():
    with pytest.raises(ModelError, match="kink"):
        PiecewiseFn.from_expr("abs(x - 1)")


def test_declared_kink_accepted():
    f = PiecewiseFn.from_expr("abs(x - 1)", knots=[1])
    P = f.subdiff(1.0)
    assert (P.lo, P.hi) == (-1.0, 1.0)


def test_discontinuity_rejected():
    with pytest.raises(ModelError):
        PiecewiseFn.from_expr("piecewise{ [-2,-1]: x - 1; [-1,0]: 0 }")


def test_domain_endpoint_one_sided(g2):
    assert clarke_subdiff_1d(g2, 1.0) == Polytope.point(1.0)
    assert clarke_subdiff_1d(g2, -1.0) == Polytope.point(6.0)


def test_directional_derivative_examples():
    assert directional_derivative(Polytope.interval(-1, 1), 1.0) == 1.0
    assert directional_derivative(Polytope.point(-5), -1.0) == 5.0
    # enumerate generators: 0*-2 = 0, 1*-2 = -2
    assert directional_derivative(Polytope.interval(0, 1), -2.0) == max(0 * -2, 1 * -2)
    with pytest.raises(ValueError):
        directional_derivative(Polytope.interval(0, 1), (1.0, 2.0))


def test_contains_zero_examples():
    assert contains_zero(Polytope.interval(-1, 1))
    assert not contains_zero(Polytope.point(-5))
    assert contains_zero(Polytope.interval(0, 1))


def test_contains_zero_nd():
    tri = Polytope(((1.0, 0.0), (0.0, 1.0), (-1.0, -1.0)))
    assert contains_zero(tri)
    off = Polytope(((1.0, 0.0), (0.0, 1.0)))
    assert not contains_zero(off)
    # 1-norm distance from 0 to the segment x + y = 1 in the positive quadrant
    assert distance_to_zero(off) == pytest.approx(1.0)


def test_minkowski_sum():
    P = minkowski_sum([Polytope.interval(-1, 1), Polytope.point(-5)], [0.75, 0.4])
    assert (P.lo, P.hi) == pytest.approx((-2.75, -1.25))


def test_estimate_shape_function(s):
    P = estimate_limiting_gradients(s, 0.0)
    exact = clarke_subdiff_1d(s, 0.0)
    assert abs(P.lo - exact.lo) <= 1e-4 and abs(P.hi - exact.hi) <= 1e-4


def test_estimate_smooth_square():
    # sampled gradients 2y spread by 2r, so the schedule has to reach r = 1e-7
    P = estimate_limiting_gradients(lambda x: x * x, 1.0, radii=(1e-3, 1e-5, 1e-7))
    assert abs(P.lo - 2) <= 1e-6 and abs(P.hi - 2) <= 1e-6


def test_estimate_abs():
    # exact one-sided derivatives of |x| at 0 are -1 and +1
    P = estimate_limiting_gradients(abs, 0.0)
    assert (P.lo, P.hi) == pytest.approx((-1.0, 1.0), abs=1e-9)


def test_estimate_rejects_bad_inputs():
    with pytest.raises(ValueError):
        estimate_limiting_gradients(abs, 0.0, samples=1)
    with pytest.raises(ValueError):
        limiting_gradient_history(abs, 0.0, radii=(1e-3, 1e-2))


@pytest.mark.parametrize("name", ["s", "abs", "g2"])
def test_estimation_converges(name, s, g2):
    f, exact = {"s": (s, clarke_subdiff_1d(s, 0.0)), "abs": (abs, Polytope.interval(-1, 1)),
                "g2": (g2, clarke_subdiff_1d(g2, 0.0))}[name]
    hist = limiting_gradient_history(f, 0.0, (1e-2, 1e-3, 1e-4, 1e-5, 1e-6))
    err = [max(abs(P.lo - exact.lo), abs(P.hi - exact.hi)) for P in hist]
    assert all(b <= a + 1e-4 for a, b in zip(err, err[1:]))
    assert err[-1] <= 1e-4


def test_oracle_fn_nd():
    f = OracleFn(lambda v: abs(v[0]) + v[1] ** 2)
    P = f.subdiff(np.array([0.0, 1.0]))
    A = P.array()
    assert A[:, 0].min() == pytest.approx(-1, abs=1e-4) and A[:, 0].max() == pytest.approx(1, abs=1e-4)
    assert np.allclose(A[:, 1], 2, atol=1e-4)
    g = OracleFn(lambda v: abs(v[0]), generators=lambda u: [(-1.0, 0.0), (1.0, 0.0)])
    assert contains_zero(g.subdiff((0.0, 0.0)))


smooth_sources = st.sampled_from(["x^2", "x^3 + x", "exp(x) - x", "ln(x^2 + 1)", "x^2 - 5*x", "3*x - exp(x)"])


@given(smooth_sources, st.floats(-2, 2))
def test_smooth_points_give_derivative(src, x):
    f = PiecewiseFn.from_expr(src)
    P = clarke_subdiff_1d(f, x)
    assert P.is_singleton()
    h = 1e-5
    fd = (f(x + h) - f(x - h)) / (2 * h)
    assert P.lo == pytest.approx(fd, abs=1e-6, rel=1e-6)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-3, 3))
def test_hull_consistency(a, b, d):
    P = Polytope.interval(min(a, b), max(a, b))
    assert directional_derivative(P, d) + directional_derivative(P, -d) >= 0


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=5),
       st.tuples(st.floats(-2, 2), st.floats(-2, 2)))
def test_hull_consistency_nd(gens, d):
    P = Polytope(tuple(gens))
    assert directional_derivative(P, d) + directional_derivative(P, tuple(-v for v in d)) >= -1e-12


@given(st.sampled_from(["x^2", "abs(x)", "max(x, 0)", "piecewise{ [-3,0]: -x; [0,3]: 2*x }"]),
       st.floats(-2, 2))
def test_convex_subgradient_inequality(src, x):
    knots = [0] if ("abs" in src or "max" in src) else []
    f = PiecewiseFn.from_expr(src, knots=knots)
    ys = np.linspace(-2.5, 2.5, 101)
    for (xi,) in f.subdiff(x).generators:
        assert np.all(f(ys) >= f(x) + xi * (ys - x) - 1e-12)


@given(st.floats(-1, 1))
def test_subdiff_at_kinks_contains_one_sided_limits(x0):
    assume(abs(x0) > 1e-3)
    f = PiecewiseFn.from_expr(f"abs(x - ({x0!r}))", knots=[x0])
    P = f.subdiff(x0)
    assert (P.lo, P.hi) == (-1.0, 1.0)
