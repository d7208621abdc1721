"""Command-line entry point: ``fuzzinvex <command> [options]``.

Every command prints one JSON report (or writes it to ``--out``) and exits with
0 when the verdict passes, 1 when it fails and 2 on usage or model errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .errors import ExprSyntaxError, FuzzInvexError, ProblemError
from .expr import ExprFn, parse_expression
from .fixtures import fixture_path
from .fop import (FOPSpec, TheoremPipeline, bridge_check, build_vmp, check_nondominated, kkt_sweep,
                  run_theorem)
from .fuzzy import alpha_cut
from .invexity import SCALAR_PROPERTIES, VECTOR_PROPERTIES, Verdict, certify, pair_grid
from .kkt import MultiplierSet
from .nonsmooth import PiecewiseFn
from .pareto import pareto_front
from .problem import ProblemFile, parse_grid, parse_problem, split_top

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
MAX_WITNESSES = 20
PROPERTIES = SCALAR_PROPERTIES + VECTOR_PROPERTIES

VALUE_OPTIONS = {"--problem", "--point", "--alpha", "--mu", "--lambda", "--theta", "--eta", "--beta", "--grid",
                 "--property", "--fn", "--knots", "--out", "--tol", "--mode", "--reading", "--theorem",
                 "--multipliers", "--max-witnesses"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _join_negative_values(argv: list[str]) -> list[str]:
    """``--grid -1:2:0.1`` becomes ``--grid=-1:2:0.1`` so argparse does not read it as a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and argv[i + 1] not in VALUE_OPTIONS and not argv[i + 1].startswith("--"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--tol", type=float, default=1e-9, help="comparison tolerance (default 1e-9)")
    common.add_argument("--no-timings", action="store_true", help="omit timings (byte-stable reports)")
    common.add_argument("--max-witnesses", type=int, default=MAX_WITNESSES)

    prob = _Parser(add_help=False)
    prob.add_argument("--problem", help="problem file or a bundled fixture name")
    prob.add_argument("--point", help="point u under test")
    prob.add_argument("--alpha", help="level a or grid a:b:step")

    mult = _Parser(add_help=False)
    mult.add_argument("--mu", help="inequality multipliers, comma separated")
    mult.add_argument("--lambda", dest="lambdas", help="objective weights l1,l2 (or 'normalized')")
    mult.add_argument("--theta", help="equality multipliers, comma separated")

    p = _Parser(prog="fuzzinvex", description="Verification toolkit for nonsmooth fuzzy optimization.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sub.add_parser("check-kkt", parents=[common, prob, mult], help="verify KKT multipliers per level")
    sub.add_parser("solve-kkt", parents=[common, prob, mult], help="search KKT multipliers per level")

    c = sub.add_parser("certify", parents=[common, prob], help="certify an invexity property on a grid")
    c.add_argument("--property", required=True, choices=PROPERTIES)
    c.add_argument("--fn", action="append", default=[], help="function of x (repeat for vectors)")
    c.add_argument("--knots", help="declared kinks, comma separated, applied to every --fn")
    c.add_argument("--eta", help="kernel eta(x, u)")
    c.add_argument("--beta", action="append", default=[], help="beta_i(x, u) (repeat per component)")
    c.add_argument("--grid", help="a:b:step, a count over the problem domain, or (v, ...)")
    c.add_argument("--reading", choices=("envelope", "existential"), default="envelope")

    pa = sub.add_parser("pareto", parents=[common, prob], help="Pareto and weak fronts of VMP_alpha")
    pa.add_argument("--mode", choices=("pareto", "weak"), default="pareto")

    nd = sub.add_parser("nondominance", parents=[common, prob], help="brute-force fuzzy nondominance at u")
    nd.add_argument("--mode", choices=("strict", "weak"), default="strict")
    nd.add_argument("--reading", choices=("forall", "exists"), default="forall")

    sub.add_parser("bridge", parents=[common, prob], help="nondominance/Pareto/scalarization bridges at u")

    th = sub.add_parser("theorem", parents=[common, prob, mult], help="run a sufficiency-theorem pipeline")
    th.add_argument("--theorem", help="theorem id (T37, T38, T62, T63, T64, T65)")
    th.add_argument("--eta", help="kernel eta(x, u), overrides the problem file")
    th.add_argument("--multipliers", choices=("verify", "solve"))

    ex = sub.add_parser("run-example", parents=[common], help="reproduce a bundled worked example")
    ex.add_argument("example", choices=("ex1", "ex2", "ex3"))
    return p


# -- helpers -------------------------------------------------------------------

def _numbers(text: str) -> tuple[float, ...]:
    t = text.strip()
    if t.startswith("(") and t.endswith(")"):
        t = t[1:-1]
    return tuple(float(parse_expression(v, ()).evaluate({})) for v in split_top(t))


def _load(args) -> ProblemFile:
    if not getattr(args, "problem", None):
        raise UsageError("--problem is required for this command")
    path = Path(args.problem)
    if not path.exists() and fixture_path(args.problem) is not None:
        path = fixture_path(args.problem)
    pf = parse_problem(path)
    pf.spec.tol = args.tol
    return pf


def _point(args, pf: ProblemFile | None) -> float:
    if getattr(args, "point", None) is not None:
        return _numbers(args.point)[0]
    if pf is not None and pf.point is not None:
        return pf.point
    raise UsageError("no point given (use --point or 'point = ...' in the problem file)")


def _alphas(args, pf: ProblemFile) -> tuple[float, ...]:
    if getattr(args, "alpha", None):
        grid = tuple(float(a) for a in parse_grid(args.alpha))
        if any(a < 0 or a > 1 for a in grid):
            raise UsageError(f"levels must lie in [0, 1], got {args.alpha}")
        return grid
    return pf.spec.alpha_grid


def _key(a: float) -> str:
    return f"{a:g}"


def _pipeline(args, pf: ProblemFile, theorem: str | None = None, mode: str | None = None,
              need_eta: bool = True) -> TheoremPipeline:
    lam = pf.lambdas
    if getattr(args, "lambdas", None):
        lam = None if args.lambdas.strip() == "normalized" else _numbers(args.lambdas)
    elif mode == "solve" and getattr(args, "command", "") == "solve-kkt":
        lam = None
    if lam is not None and len(lam) != 2:
        raise UsageError("--lambda needs two values")
    mu = _numbers(args.mu) if getattr(args, "mu", None) else pf.mu
    theta = _numbers(args.theta) if getattr(args, "theta", None) else pf.theta
    eta = pf.eta
    if getattr(args, "eta", None):
        eta = ExprFn(parse_expression(args.eta, ("x", "u")), ("x", "u"))
    if eta is None:
        if need_eta:
            raise UsageError("no eta given (use --eta or 'eta(x,u) = ...' in the problem file)")
        eta = _zero_eta  # KKT checks never evaluate the kernel
    return TheoremPipeline(theorem or pf.theorem or "T38", eta,
                           pf.beta.get("objective"), pf.beta.get("ineq"), pf.beta.get("eq"),
                           mode or pf.multipliers, lam, mu, theta, pf.alpha_scope)


def _zero_eta(x, u):
    return 0 * x


def _witness_rows(source: str, v: Verdict, limit: int) -> list[dict]:
    return [{"source": source, **w.as_dict()} for w in v.witnesses[:limit]]


# -- commands ------------------------------------------------------------------

def _subtraction_notes(f: FOPSpec, u: float, alphas) -> list[dict]:
    """Levels where the Hukuhara difference would differ from the cross difference used."""
    return [d for a in alphas if (d := f.objective.hukuhara_differs(u, a)) is not None]


def _kkt_command(args, solve: bool):
    pf = _load(args)
    u = _point(args, pf)
    pl = _pipeline(args, pf, mode="solve" if solve else "verify", need_eta=False)
    if not solve and pl.lambdas is None:
        raise UsageError("check-kkt needs lambda values (--lambda or the problem file)")
    alphas = _alphas(args, pf)
    sweep = kkt_sweep(pf.spec, u, pl, alphas)
    table = [{"alpha": a, **r.as_dict()} for a, r in sweep.items()]
    witnesses = [{"source": "kkt", "alpha": a, "residual": r.residual, "flags": list(r.flags)}
                 for a, r in sweep.items() if not r.feasible]
    ok = all(r.feasible for r in sweep.values())
    return ok, {"u": u, "mode": "solve" if solve else "verify", "table": table,
                "feasible_levels": sum(r.feasible for r in sweep.values()), "levels": len(sweep),
                "subtraction_notes": _subtraction_notes(pf.spec, u, alphas)}, witnesses


def _fns_from_args(args) -> list[PiecewiseFn]:
    knots = _numbers(args.knots) if args.knots else ()
    out = []
    for i, src in enumerate(args.fn):
        out.append(PiecewiseFn.from_expr(parse_expression(src, ("x",)), knots=knots, name=f"f{i + 1}"))
    return out


def _cmd_certify(args):
    prop = args.property
    limit = args.max_witnesses
    eta = ExprFn(parse_expression(args.eta, ("x", "u")), ("x", "u")) if args.eta else None
    betas = [ExprFn(parse_expression(b, ("x", "u")), ("x", "u")) for b in args.beta] or None
    if args.fn:
        if eta is None:
            raise UsageError("certify needs --eta")
        if not args.grid:
            raise UsageError("certify --fn needs --grid")
        xs = parse_grid(args.grid)
        us = None if args.point is None else [_numbers(args.point)[0]]
        pairs = pair_grid(xs, us)
        fns = _fns_from_args(args)
        results, witnesses = {}, []
        if prop in VECTOR_PROPERTIES:
            v = certify(prop, fns, eta, pairs, betas, args.tol, args.reading)
            results["vector"] = v.as_dict(limit)
            witnesses += _witness_rows("vector", v, limit)
            ok = v.passed
        else:
            ok = True
            for f, src in zip(fns, args.fn):
                v = certify(prop, f, eta, pairs, None, args.tol, args.reading)
                results[f.name] = {"expression": src, **v.as_dict(limit)}
                witnesses += _witness_rows(f.name, v, limit)
                ok &= v.passed
        return ok, {"property": prop, "pairs": pairs.count, "grid_points": len(xs),
                    "point": None if us is None else us[0], "checks": results}, witnesses

    # problem mode: endpoint functions at each level and the constraints
    if prop in VECTOR_PROPERTIES:
        raise UsageError("vector properties need --fn components")
    pf = _load(args)
    f = pf.spec
    eta = eta or pf.eta
    if eta is None:
        raise UsageError("no eta given (use --eta or 'eta(x,u) = ...' in the problem file)")
    if args.grid:
        g = args.grid.strip()
        xs = np.linspace(*f.domain, int(g)) if g.isdigit() else parse_grid(g)
    else:
        xs = f.feasible_grid()
    us = None if args.point is None else [_point(args, pf)]
    pairs = pair_grid(xs, us)
    results, witnesses, ok = {}, [], True
    for a in _alphas(args, pf):
        for name, fn in zip(("f^L", "f^R"), f.endpoint_fns(a)):
            v = certify(prop, fn, eta, pairs, None, args.tol, args.reading)
            results[f"{name}[{_key(a)}]"] = v.as_dict(limit)
            witnesses += _witness_rows(f"{name}[{_key(a)}]", v, limit)
            ok &= v.passed
    for kind, fns in (("g", f.constraints_ineq), ("h", f.constraints_eq)):
        for j, fn in enumerate(fns):
            v = certify(prop, fn, eta, pairs, None, args.tol, args.reading)
            results[f"{kind}{j + 1}"] = v.as_dict(limit)
            witnesses += _witness_rows(f"{kind}{j + 1}", v, limit)
            ok &= v.passed
    return ok, {"property": prop, "pairs": pairs.count, "grid_points": len(xs),
                "point": None if us is None else us[0], "checks": results}, witnesses


def _cmd_pareto(args):
    pf = _load(args)
    u = None
    if args.point is not None or pf.point is not None:
        u = _point(args, pf)
    per, ok = {}, True
    for a in _alphas(args, pf):
        P = build_vmp(pf.spec, a, include=[] if u is None else [u])
        front = pareto_front(P, args.mode)
        row = {"size": len(front), "points": front.as_list(), "empty_feasible": front.empty_feasible}
        if u is not None:
            row["contains_point"] = front.contains(u)
            ok &= row["contains_point"]
        ok &= not front.empty_feasible
        per[_key(a)] = row
    witnesses = [{"source": "pareto", "alpha": k, "point": u} for k, r in per.items()
                 if u is not None and not r["contains_point"]]
    return ok, {"mode": args.mode, "point": u, "per_alpha": per}, witnesses


def _cmd_nondominance(args):
    pf = _load(args)
    u = _point(args, pf)
    v = check_nondominated(pf.spec, u, args.mode, args.reading, _alphas(args, pf))
    return v.passed, {"point": u, "mode": args.mode, "reading": args.reading,
                      "check": v.as_dict(args.max_witnesses)}, _witness_rows("nondominance", v,
                                                                              args.max_witnesses)


def _cmd_bridge(args):
    pf = _load(args)
    u = _point(args, pf)
    rep = bridge_check(pf.spec, u, _alphas(args, pf))
    ok = all(rep["consistent_readings"].values()) and rep["scalarization_consistent"]
    witnesses = [{"source": f"bridge[{r}]", "proposition": k}
                 for r, d in rep["readings"].items() for k, v in d.items() if v == "violated"]
    return ok, rep, witnesses


def _cmd_theorem(args):
    pf = _load(args)
    u = _point(args, pf)
    pl = _pipeline(args, pf, args.theorem, args.multipliers)
    if args.alpha:
        alphas = _alphas(args, pf)
        pf.spec.alpha_grid = alphas
    rep = run_theorem(pf.spec, u, pl)
    ok = rep["status"] == "concluded" and bool(rep["agrees_with_oracle"])
    witnesses = []
    if rep["failed"]:
        witnesses.append({"source": "hypothesis", "check": rep["failed"]["check"], "alpha": rep["failed"]["alpha"]})
    return ok, rep, witnesses


# -- worked examples -------------------------------------------------------------

def _ex1(args):
    pf = parse_problem(fixture_path("paper_ex1.fop"))
    f, u = pf.spec, 0.0
    checks, witnesses = {}, []
    two = pf.fuzzy["two"]
    rows, worst = [], 0.0
    for a in f.alpha_grid:
        cut = alpha_cut(two, a)
        c = 0.25 * cut.lo + 0.75 * cut.hi
        closed = 3 - 2 * a / 3 if a <= 0.75 else 4 - 2 * a
        worst = max(worst, abs(c - closed))
        rows.append({"alpha": a, "c": c, "closed_form": closed, "error": abs(c - closed)})
    checks["c_alpha"] = {"passed": worst <= 1e-12, "max_error": worst, "table": rows}

    sweep = kkt_sweep(f, u, TheoremPipeline("T38", pf.eta, lambdas=(0.25, 0.75), mu=(0.4,)))
    kkt_ok = all(r.feasible and r.residual <= 1e-9 for r in sweep.values())
    checks["kkt"] = {"passed": kkt_ok, "mu": 0.4, "lambda": [0.25, 0.75],
                     "table": [{"alpha": a, **r.as_dict()} for a, r in sweep.items()]}

    xs = np.linspace(0.0, 5.0, 101)
    for label, us in (("invex_pairs", None), ("invex_at_u", [u])):
        pairs = pair_grid(xs, us)
        per, ok = {}, True
        for a in f.alpha_grid:
            for name, fn in zip(("f^L", "f^R"), f.endpoint_fns(a)):
                v = certify("invex", fn, pf.eta, pairs, eps=args.tol)
                per[f"{name}[{_key(a)}]"] = v.as_dict(3)
                ok &= v.passed
                if label == "invex_pairs":
                    witnesses += _witness_rows(f"{label}:{name}[{_key(a)}]", v, 1)
        v = certify("invex", f.constraints_ineq[0], pf.eta, pairs, eps=args.tol)
        per["g"] = v.as_dict(3)
        ok &= v.passed
        if label == "invex_pairs":
            witnesses += _witness_rows(f"{label}:g", v, 1)
        checks[label] = {"passed": ok, "pairs": pairs.count, "checks": per,
                         "counts_toward_verdict": label == "invex_pairs"}

    nd = check_nondominated(f, u, "strict")
    checks["nondominated"] = {"passed": nd.passed, "grid_points": f.x_points, **nd.as_dict(5)}
    witnesses += _witness_rows("nondominated", nd, 5)
    ok = all(c["passed"] for k, c in checks.items() if k != "invex_at_u")
    return ok, {"example": "ex1", "point": u, "checks": checks,
                "subtraction_notes": _subtraction_notes(f, u, f.alpha_grid)}, witnesses


def _ex2(args):
    pf = parse_problem(fixture_path("paper_ex2.fop"))
    f, u = pf.spec, 0.0
    checks, witnesses = {}, []
    g1, g2 = f.constraints_ineq
    sd = {"g1": [g1.subdiff(u).lo, g1.subdiff(u).hi], "g2": [g2.subdiff(u).lo, g2.subdiff(u).hi]}
    checks["subdifferentials"] = {"passed": sd == {"g1": [1.0, 1.0], "g2": [0.0, 1.0]}, **sd}
    sweep = kkt_sweep(f, u, TheoremPipeline("T63", pf.eta, lambdas=(0.25, 0.75), mu=(1.0, 1.0)))
    checks["kkt"] = {"passed": all(r.feasible and r.residual <= 1e-9 for r in sweep.values()), "mu": [1, 1],
                     "table": [{"alpha": a, **r.as_dict()} for a, r in sweep.items()]}
    xs = np.linspace(-1.0, 0.0, 201)
    v = certify("v_quasiinvex", [g1, g2], pf.eta, pair_grid(xs), pf.beta["ineq"], args.tol)
    checks["v_quasiinvex"] = {"passed": v.passed, **v.as_dict(5)}
    witnesses += _witness_rows("v_quasiinvex", v, 5)
    rep = run_theorem(f, u, _pipeline(argparse.Namespace(), pf))
    checks["theorem"] = {"passed": rep["status"] == "concluded" and bool(rep["agrees_with_oracle"]), **rep}
    ok = all(c["passed"] for c in checks.values())
    return ok, {"example": "ex2", "point": u, "checks": checks}, witnesses


def _ex3(args):
    pf = parse_problem(fixture_path("paper_ex3.fop"))
    f, u = pf.spec, 0.0
    checks = {}
    g = f.constraints_ineq[0]
    P = g.subdiff(u)
    checks["subdifferential"] = {"passed": (P.lo, P.hi) == (-1.0, 0.0), "g": [P.lo, P.hi]}
    sweep = kkt_sweep(f, u, TheoremPipeline("T65", pf.eta, lambdas=(0.25, 0.75), mu=(1.0,)))
    checks["kkt"] = {"passed": all(r.feasible and r.residual <= 1e-9 for r in sweep.values()), "mu": [1],
                     "table": [{"alpha": a, **r.as_dict()} for a, r in sweep.items()]}
    rep = run_theorem(f, u, _pipeline(argparse.Namespace(), pf))
    checks["theorem"] = {"passed": rep["status"] == "concluded" and bool(rep["agrees_with_oracle"]), **rep}
    ok = all(c["passed"] for c in checks.values())
    witnesses = [] if rep["failed"] is None else [{"source": "hypothesis", **rep["failed"]}]
    return ok, {"example": "ex3", "point": u, "checks": checks}, witnesses


COMMANDS = {
    "check-kkt": lambda a: _kkt_command(a, solve=False),
    "solve-kkt": lambda a: _kkt_command(a, solve=True),
    "certify": _cmd_certify,
    "pareto": _cmd_pareto,
    "nondominance": _cmd_nondominance,
    "bridge": _cmd_bridge,
    "theorem": _cmd_theorem,
    "run-example": lambda a: {"ex1": _ex1, "ex2": _ex2, "ex3": _ex3}[a.example](a),
}


# -- report ------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, tuples become lists, keys become strings."""
    if isinstance(obj, float) or isinstance(obj, np.floating):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(_clean(k)) if not isinstance(k, str) else k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, MultiplierSet):
        return _clean(obj.as_dict())
    return obj


def _digest(args) -> str:
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "no_timings")}
    if getattr(args, "problem", None):
        p = Path(args.problem)
        if not p.exists():
            p = fixture_path(args.problem) or p
        if p.exists():
            inputs["problem_text"] = p.read_text()
    if args.command == "run-example":
        inputs["problem_text"] = fixture_path(f"paper_{args.example}.fop").read_text()
    blob = json.dumps(_clean(inputs), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def render(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


@contextmanager
def _timer(timings: dict, key: str):
    t0 = time.perf_counter()
    yield
    timings[key] = round(time.perf_counter() - t0, 6)


def run_command(argv: list[str] | None = None) -> tuple[int, dict | None]:
    """Parse ``argv``, run the command and return ``(exit_code, report)``."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_join_negative_values(argv))
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR, None
    timings: dict = {}
    try:
        with _timer(timings, "total_seconds"):
            ok, results, witnesses = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fuzzinvex {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR, None
    except ProblemError as exc:
        print(f"fuzzinvex {args.command}: problem file errors:", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_ERROR, None
    except (FuzzInvexError, ExprSyntaxError, ValueError) as exc:
        print(f"fuzzinvex {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR, None
    report = {"command": args.command, "inputs_digest": _digest(args), "verdict": "pass" if ok else "fail",
              "results": results, "witnesses": witnesses}
    if not args.no_timings:
        report["timings"] = timings
    text = render(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return (EXIT_PASS if ok else EXIT_FAIL), report


def main(argv: list[str] | None = None) -> int:
    code, _ = run_command(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
