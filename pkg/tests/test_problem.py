import numpy as np
import pytest

from fuzzinvex.errors import ExprSyntaxError, ProblemError
from fuzzinvex.fixtures import fixture_names, fixture_path
from fuzzinvex.fuzzy import alpha_cut
from fuzzinvex.nonsmooth import Polytope
from fuzzinvex.problem import parse_grid, parse_problem, parse_problem_text

BASE = """
fuzzy two = knots[(0, 0), (1, 0.75), (2, 1), (3, 0.75), (4, 0)]
fn s(x) = x^2 + 1
objective = two * s
domain = [0, 1]
"""


def test_fixture_corpus():
    assert fixture_names() == ["paper_ex1.fop", "paper_ex2.fop", "paper_ex3.fop"]
    assert fixture_path("ex2") == fixture_path("paper_ex2.fop") == fixture_path("paper_ex2")
    assert fixture_path("nope") is None


def test_first_fixture(ex1):
    f = ex1.spec
    assert f.domain == (0.0, 5.0) and f.x_points == 501 and len(f.alpha_grid) == 21
    assert alpha_cut(ex1.fuzzy["two"], 0.75) == alpha_cut(ex1.fuzzy["two"], 0.75)
    assert (alpha_cut(ex1.fuzzy["two"], 0.75).lo, alpha_cut(ex1.fuzzy["two"], 0.75).hi) == (1, 3)
    assert (alpha_cut(ex1.fuzzy["one"], 0).lo, alpha_cut(ex1.fuzzy["one"], 0).hi) == (0, 2)
    g = f.constraints_ineq[0]
    assert g(0.0) == 0 and g(5.0) == 0 and g(1.0) == -4
    assert float(f.objective.shape(0.0)) == 1.0
    assert ex1.point == 0 and ex1.theorem == "T38" and ex1.mu == (0.4,)


def test_second_fixture(ex2):
    g1, g2 = ex2.spec.constraints_ineq
    assert g1.subdiff(0.0) == Polytope.point(1)
    assert g2.subdiff(0.0) == Polytope.interval(0, 1)
    assert g2(-1.0) == -3 and g2(1.0) == 1
    assert ex2.spec.objective.subtrahend == 1.0
    assert len(ex2.beta["ineq"]) == 2 and ex2.beta["ineq"][1](0.0, 2.0) == 5.0


def test_third_fixture(ex3):
    assert ex3.spec.constraints_ineq[0].subdiff(0.0) == Polytope.interval(-1, 0)
    assert ex3.spec.domain == (-1.0, 3.0)


def test_minimal_file_defaults():
    pf = parse_problem_text(BASE)
    assert pf.spec.x_points == 501 and len(pf.spec.alpha_grid) == 21
    assert pf.eta is None and pf.multipliers == "verify" and pf.spec.constraints_ineq == []


def test_undefined_fuzzy_name():
    with pytest.raises(ProblemError) as err:
        parse_problem_text(BASE.replace("two * s", "three * s"))
    assert any("three" in d for d in err.value.diagnostics)


def test_duplicate_names():
    with pytest.raises(ProblemError, match="duplicate name 's'"):
        parse_problem_text(BASE + "fn s(x) = x\n")


def test_diagnostics_are_aggregated():
    text = BASE.replace("domain = [0, 1]", "") + "fn h(x) = x +* 2\nconstraint k <= 0\nfrobnicate = 3\n"
    with pytest.raises(ProblemError) as err:
        parse_problem_text(text)
    d = "\n".join(err.value.diagnostics)
    assert "missing 'domain" in d and "column 3" in d and "unknown setting 'frobnicate'" in d
    assert len(err.value.diagnostics) >= 4


def test_count_mismatches():
    with pytest.raises(ProblemError, match="mu has 2 values for 1"):
        parse_problem_text(BASE + "constraint x - 1 <= 0\nmu = (1, 2)\n")
    with pytest.raises(ProblemError, match="unknown theorem"):
        parse_problem_text(BASE + "theorem = T99\n")
    with pytest.raises(ProblemError, match="alpha_scope"):
        parse_problem_text(BASE + "alpha_scope = some\n")


def test_infeasible_point_rejected():
    with pytest.raises(ProblemError, match="infeasible"):
        parse_problem_text(BASE + "constraint x - 0.5 <= 0\npoint = 1\n")


def test_endpoint_inversion_is_eager():
    with pytest.raises(ProblemError, match="inversion"):
        parse_problem_text(BASE.replace("x^2 + 1", "x - 1"))


def test_missing_file(tmp_path):
    with pytest.raises(ProblemError, match="cannot read"):
        parse_problem(tmp_path / "absent.fop")


def test_continuation_and_comments():
    text = BASE + "eta(x,u) = x - u  # kernel\nbeta objective = (1,\n    x^2 + 1)\n"
    pf = parse_problem_text(text)
    assert pf.eta(2.0, 0.5) == 1.5 and pf.beta["objective"][1](2.0, 0.0) == 5.0


def test_grid_syntax():
    assert np.allclose(parse_grid("-1:2:0.01")[[0, -1]], [-1, 2]) and len(parse_grid("-1:2:0.01")) == 301
    assert parse_grid("0:1:0.3") == pytest.approx([0, 0.3, 0.6, 0.9])
    assert parse_grid("0:1:0.1")[-1] == 1.0
    assert parse_grid("0.5").tolist() == [0.5]
    assert parse_grid("(0, 0.5, 1)").tolist() == [0, 0.5, 1]
    for bad in ("0:1:0", "1:0:0.1", "a:b:c"):
        with pytest.raises((ValueError, ExprSyntaxError)):
            parse_grid(bad)
