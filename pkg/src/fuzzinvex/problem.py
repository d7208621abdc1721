"""Problem files: a line-oriented declaration of a fuzzy optimization problem.

Statements (one per line, ``#`` starts a comment, open brackets continue
onto the next line)::

    fuzzy two = knots[(0,0), (1,0.75), (2,1), (3,0.75), (4,0)]
    fn s(x) = ln(x^2 + abs(x) + 1) + 1
    knots s = [0]
    objective = two * s - one
    constraint g <= 0
    domain = [0, 5]
    eta(x,u) = ln(x^2+abs(x)+1) - ln(u^2+abs(u)+1)

See ``docs/format.md`` for the full list.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ExprSyntaxError, FuzzInvexError, ModelError, ProblemError
from .expr import ExprFn, parse_expression
from .fop import FOPSpec, THEOREMS
from .fuzzy import FuzzyNumber, FuzzyObjective
from .nonsmooth import PiecewiseFn

NAME = r"[A-Za-z_][A-Za-z_0-9]*"


def parse_grid(text: str) -> np.ndarray:
    """``a:b:step`` (both ends included, last point snapped to b), a count, or a list ``(v, ...)``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must look like a:b:step")
        a, b, step = (float(_number(p)) for p in parts)
        if step <= 0 or b < a:
            raise ValueError(f"grid {text!r} needs a <= b and a positive step")
        n = int(math.floor((b - a) / step + 1e-9))
        pts = [a + k * step for k in range(n + 1)]
        if abs(pts[-1] - b) <= 1e-12 * max(1.0, abs(b)) or abs(pts[-1] - b) <= 1e-9 * step:
            pts[-1] = b
        return np.array([round(p, 12) + 0.0 for p in pts[:-1]] + [pts[-1]])
    if text.startswith(("(", "[")):
        return np.array([float(_number(v)) for v in split_top(text[1:-1])])
    return np.array([float(_number(text))])


def _number(text: str) -> float:
    """A numeric literal or a constant expression such as ``ln(3)``."""
    e = parse_expression(text.strip(), ())
    return float(e.evaluate({}))


def split_top(text: str, sep: str = ",") -> list[str]:
    """Split at ``sep`` outside any parentheses, brackets or braces."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail or out:
        out.append(tail)
    return out


def _tuple(text: str) -> list[str]:
    t = text.strip()
    if t.startswith("(") and t.endswith(")"):
        t = t[1:-1]
    return split_top(t)


@dataclass
class ProblemFile:
    spec: FOPSpec
    fuzzy: dict[str, FuzzyNumber]
    functions: dict[str, PiecewiseFn]
    sources: dict[str, str]
    eta: ExprFn | None = None
    beta: dict[str, list[ExprFn]] = field(default_factory=dict)
    lambdas: tuple[float, float] | None = None
    mu: tuple[float, ...] | None = None
    theta: tuple[float, ...] | None = None
    point: float | None = None
    theorem: str | None = None
    multipliers: str = "verify"
    alpha_scope: str = "all"
    path: str | None = None
    text: str = ""


def _logical_lines(text: str):
    """Yield ``(line_number, statement)`` joining lines while brackets are open."""
    buf, start, depth = [], 0, 0
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip() and not buf:
            continue
        if not buf:
            start = i
        buf.append(line.strip())
        depth += sum(line.count(c) for c in "([{") - sum(line.count(c) for c in ")]}")
        if depth <= 0:
            yield start, " ".join(buf)
            buf, depth = [], 0
    if buf:
        yield start, " ".join(buf)


_FUZZY = re.compile(rf"^fuzzy\s+({NAME})\s*=\s*knots\s*\[(.*)\]$")
_FN = re.compile(rf"^fn\s+({NAME})\s*\(\s*x\s*\)\s*=\s*(.+)$")
_KNOTS = re.compile(rf"^knots\s+({NAME})\s*=\s*\[(.*)\]$")
_OBJ = re.compile(rf"^objective\s*=\s*({NAME})\s*\*\s*({NAME})\s*(?:-\s*(.+))?$")
_CON = re.compile(r"^constraint\s+(.+?)\s*(<=|=)\s*0$")
_ETA = re.compile(r"^eta\s*\(\s*x\s*,\s*u\s*\)\s*=\s*(.+)$")
_BETA = re.compile(r"^beta\s+(objective|ineq|eq)\s*=\s*(.+)$")
_KV = re.compile(rf"^({NAME})\s*=\s*(.+)$")


def parse_problem_text(text: str, path: str | None = None) -> ProblemFile:
    diags: list[str] = []
    fuzzy: dict[str, FuzzyNumber] = {}
    fn_src: dict[str, tuple[int, str]] = {}
    knots: dict[str, list[float]] = {}
    objective = None
    cons: list[tuple[int, str, str]] = []
    settings: dict[str, tuple[int, str]] = {}
    eta_src = None
    beta_src: dict[str, tuple[int, str]] = {}
    names: dict[str, int] = {}

    def declare(name, ln):
        if name in names:
            diags.append(f"line {ln}: duplicate name '{name}' (first declared on line {names[name]})")
        else:
            names[name] = ln

    for ln, st in _logical_lines(text):
        try:
            if m := _FUZZY.match(st):
                declare(m[1], ln)
                pts = []
                for item in split_top(m[2]):
                    xy = _tuple(item)
                    if len(xy) != 2:
                        raise ValueError(f"knot {item!r} is not an (x, mu) pair")
                    pts.append((_number(xy[0]), _number(xy[1])))
                fuzzy[m[1]] = FuzzyNumber(tuple(pts))
            elif m := _FN.match(st):
                declare(m[1], ln)
                fn_src[m[1]] = (ln, m[2])
            elif m := _KNOTS.match(st):
                knots[m[1]] = [_number(v) for v in split_top(m[2])]
            elif m := _OBJ.match(st):
                if objective is not None:
                    diags.append(f"line {ln}: more than one objective")
                objective = (ln, m[1], m[2], m[3])
            elif m := _CON.match(st):
                cons.append((ln, m[1], m[2]))
            elif m := _ETA.match(st):
                eta_src = (ln, m[1])
            elif m := _BETA.match(st):
                beta_src[m[1]] = (ln, m[2])
            elif m := _KV.match(st):
                if m[1] in settings:
                    diags.append(f"line {ln}: '{m[1]}' set twice")
                settings[m[1]] = (ln, m[2].strip())
            else:
                diags.append(f"line {ln}: unrecognized statement {st!r}")
        except (ValueError, FuzzInvexError) as exc:
            diags.append(f"line {ln}: {exc}")

    functions: dict[str, PiecewiseFn] = {}
    for name, (ln, src) in fn_src.items():
        try:
            functions[name] = PiecewiseFn.from_expr(parse_expression(src, ("x",)), knots=knots.get(name, ()),
                                                    name=name)
        except ExprSyntaxError as exc:
            diags.append(f"line {ln}: in fn {name}: {exc}")
        except (ValueError, FuzzInvexError) as exc:
            diags.append(f"line {ln}: fn {name}: {exc}")
    for name in knots:
        if name not in fn_src:
            diags.append(f"knots declared for undefined function '{name}'")

    def get(key, default=None):
        return settings[key] if key in settings else (None, default)

    def parsed(key, conv, default=None):
        ln, val = get(key)
        if val is None:
            return default
        try:
            return conv(val)
        except (ValueError, FuzzInvexError) as exc:
            diags.append(f"line {ln}: bad value for '{key}': {exc}")
            return default

    domain = parsed("domain", lambda v: tuple(_number(p) for p in _tuple(v.strip("[]"))))
    if domain is None:
        diags.append("missing 'domain = [a, b]'")
    elif len(domain) != 2 or not domain[0] <= domain[1]:
        diags.append(f"domain must be [a, b] with a <= b, got {list(domain)}")
        domain = None
    x_points = parsed("grid", lambda v: int(v), 501)
    alphas = parsed("alpha", lambda v: tuple(float(a) for a in parse_grid(v)), None)

    obj = None
    if objective is None:
        diags.append("missing objective")
    else:
        ln, coef, shape, sub = objective
        if coef not in fuzzy:
            diags.append(f"line {ln}: undefined fuzzy number '{coef}'")
        if shape not in functions and shape not in fn_src:
            diags.append(f"line {ln}: undefined function '{shape}'")
        subtrahend = 0.0
        if sub is not None:
            sub = sub.strip()
            if re.fullmatch(NAME, sub) and sub not in ("e", "pi"):
                if sub not in fuzzy:
                    diags.append(f"line {ln}: undefined fuzzy number '{sub}'")
                else:
                    subtrahend = fuzzy[sub]
            else:
                try:
                    subtrahend = _number(sub)
                except (ValueError, FuzzInvexError) as exc:
                    diags.append(f"line {ln}: bad subtrahend {sub!r}: {exc}")
        if coef in fuzzy and shape in functions:
            obj = FuzzyObjective(fuzzy[coef], functions[shape], subtrahend)

    ineq, eq = [], []
    for i, (ln, lhs, op) in enumerate(cons):
        lhs = lhs.strip()
        if re.fullmatch(NAME, lhs) and lhs in fn_src:
            fn = functions.get(lhs)
        else:
            try:
                fn = PiecewiseFn.from_expr(parse_expression(lhs, ("x",)),
                                           name=f"{'g' if op == '<=' else 'h'}{i + 1}")
            except ExprSyntaxError as exc:
                diags.append(f"line {ln}: in constraint: {exc}")
                continue
            except (ValueError, FuzzInvexError) as exc:
                diags.append(f"line {ln}: constraint: {exc}")
                continue
        if fn is not None:
            (ineq if op == "<=" else eq).append(fn)

    eta = None
    if eta_src is not None:
        try:
            eta = ExprFn(parse_expression(eta_src[1], ("x", "u")), ("x", "u"))
        except ExprSyntaxError as exc:
            diags.append(f"line {eta_src[0]}: in eta: {exc}")
    beta = {}
    for kind, (ln, src) in beta_src.items():
        try:
            beta[kind] = [ExprFn(parse_expression(p, ("x", "u")), ("x", "u")) for p in _tuple(src)]
        except ExprSyntaxError as exc:
            diags.append(f"line {ln}: in beta {kind}: {exc}")

    def numbers(v):
        return tuple(_number(p) for p in _tuple(v))

    lambdas = parsed("lambda", numbers)
    if lambdas is not None and len(lambdas) != 2:
        diags.append(f"lambda needs two values, got {len(lambdas)}")
        lambdas = None
    mu = parsed("mu", numbers)
    if mu is not None and len(mu) != len(ineq):
        diags.append(f"mu has {len(mu)} values for {len(ineq)} inequality constraints")
    theta = parsed("theta", numbers)
    if theta is not None and len(theta) != len(eq):
        diags.append(f"theta has {len(theta)} values for {len(eq)} equality constraints")
    point = parsed("point", _number)
    theorem = parsed("theorem", str.strip)
    if theorem is not None and theorem not in THEOREMS:
        diags.append(f"unknown theorem '{theorem}'; expected one of {', '.join(THEOREMS)}")
    multipliers = parsed("multipliers", str.strip, "verify")
    if multipliers not in ("verify", "solve"):
        diags.append(f"multipliers must be 'verify' or 'solve', got '{multipliers}'")
    scope = parsed("alpha_scope", str.strip, "all")
    if scope not in ("all", "single"):
        diags.append(f"alpha_scope must be 'all' or 'single', got '{scope}'")
    for key in settings:
        if key not in ("domain", "grid", "alpha", "lambda", "mu", "theta", "point", "theorem",
                       "multipliers", "alpha_scope"):
            diags.append(f"line {settings[key][0]}: unknown setting '{key}'")

    spec = None
    if not diags and obj is not None and domain is not None:
        try:
            kw = {} if alphas is None else {"alpha_grid": alphas}
            spec = FOPSpec(obj, ineq, eq, domain, x_points=x_points, **kw)
            xs = spec.x_grid()
            for a in spec.alpha_grid:
                obj.endpoint_arrays(xs, a)
            if point is not None:
                spec.require_feasible(point)
        except (ValueError, FuzzInvexError) as exc:
            diags.append(str(exc))
    if diags:
        raise ProblemError(diags)
    return ProblemFile(spec, fuzzy, functions, {k: v[1] for k, v in fn_src.items()}, eta, beta, lambdas, mu,
                       theta, point, theorem, multipliers, scope, path, text)


def parse_problem(path) -> ProblemFile:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ProblemError([f"cannot read {p}: {exc.strerror or exc}"]) from exc
    return parse_problem_text(text, str(p))


__all__ = ["ProblemFile", "parse_problem", "parse_problem_text", "parse_grid", "split_top", "ModelError"]
