"""Bundled problem files and the counterexample matrix for the invexity classes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .expr import ExprFn
from .invexity import Verdict, certify, pair_grid
from .nonsmooth import PiecewiseFn
from .problem import parse_grid

FIXTURE_DIR = Path(__file__).with_name("fixtures")


def fixture_path(name: str) -> Path | None:
    """Resolve ``paper_ex1.fop``, ``paper_ex1`` or ``ex1`` to a bundled file."""
    stem = Path(name).name
    for cand in (stem, f"{stem}.fop", f"paper_{stem}.fop"):
        p = FIXTURE_DIR / cand
        if p.is_file():
            return p
    return None


def fixture_names() -> list[str]:
    return sorted(p.name for p in FIXTURE_DIR.glob("*.fop"))


@dataclass(frozen=True)
class Counterexample:
    name: str
    prop: str
    fns: tuple[str, ...]
    eta: str
    grid: str
    expected: bool
    beta: tuple[str, ...] | None = None
    point: float | None = None
    extra_points: tuple[float, ...] = ()
    reading: str = "envelope"
    note: str = ""

    def functions(self) -> list[PiecewiseFn]:
        # shape functions live on the real line unless a piecewise guard narrows them
        return [PiecewiseFn.from_expr(src, name=f"f{i + 1}") for i, src in enumerate(self.fns)]

    def xs(self) -> np.ndarray:
        return np.unique(np.concatenate([parse_grid(self.grid), np.asarray(self.extra_points, dtype=float)]))

    def run(self, reading: str | None = None, eps: float = 1e-9) -> Verdict:
        fns = self.functions()
        eta = ExprFn(self.eta, ("x", "u"))
        beta = None if self.beta is None else [ExprFn(b, ("x", "u")) for b in self.beta]
        us = None if self.point is None else [self.point]
        target = fns if self.prop.startswith("v_") else fns[0]
        return certify(self.prop, target, eta, pair_grid(self.xs(), us), beta, eps, reading or self.reading)


_PW1 = ("piecewise{ [-1, 0]: -6*x^2; [0, 1]: x }", "piecewise{ [-1, 0]: 7*x^2 + 9*x^6; [0, 1]: x }")
_PW2 = ("piecewise{ [-1, 0]: x^2; [0, 1]: x }", "piecewise{ [-1, 0]: -3*x^2; [0, 1]: x }")
_BETA = ("x^2 + 1", "u^2 + 1")

COUNTEREXAMPLES: tuple[Counterexample, ...] = (
    Counterexample("cubic_pair_v_pseudo", "v_pseudoinvex", ("-x^3", "-x"), "x - u", "-2:2:0.02", True),
    Counterexample("cubic_pair_v_quasi", "v_quasiinvex", ("-x^3", "-x"), "x - u", "-2:2:0.02", True),
    Counterexample("cubic_pair_v_invex", "v_invex", ("-x^3", "-x"), "x - u", "-2:2:0.02", False,
                   note="saddle of -x^3 at 0"),
    Counterexample("linear_pseudo", "pseudoinvex", ("3*x",), "x - u", "-1:3:0.02", True),
    Counterexample("neg_exp_pseudo", "pseudoinvex", ("-exp(x)",), "x - u", "-1:3:0.02", True),
    Counterexample("linear_minus_exp_pseudo", "pseudoinvex", ("3*x - exp(x)",), "x - u", "-1:3:0.02", False,
                   extra_points=(math.log(3),), note="stationary maximum at ln 3"),
    Counterexample("square_quasi", "quasiinvex", ("x^2",), "x - u", "-1:2:0.01", True),
    Counterexample("neg_cube_quasi", "quasiinvex", ("-x^3",), "x - u", "-1:2:0.01", True),
    Counterexample("square_minus_cube_quasi", "quasiinvex", ("x^2 - x^3",), "x - u", "-1:2:0.01", False,
                   extra_points=(2 / 3,), note="z(2/3) > 0 = z(0) = z(1)"),
    Counterexample("vpseudo_not_vquasi_pseudo", "v_pseudoinvex", _PW1, "1 - 2*x^2 + u", "-1:1:0.01", True,
                   beta=_BETA, point=0.0, extra_points=(-math.sqrt(1 / 3),)),
    Counterexample("vpseudo_not_vquasi_quasi", "v_quasiinvex", _PW1, "1 - 2*x^2 + u", "-1:1:0.01", False,
                   beta=_BETA, point=0.0, extra_points=(-math.sqrt(1 / 3),), note="fails at x = -sqrt(1/3)"),
    Counterexample("vquasi_not_vpseudo_quasi", "v_quasiinvex", _PW2, "x^2 - 1 + u", "-1:1:0.01", True,
                   beta=_BETA, point=0.0),
    Counterexample("vquasi_not_vpseudo_pseudo", "v_pseudoinvex", _PW2, "x^2 - 1 + u", "-1:1:0.01", False,
                   beta=_BETA, point=0.0, note="fails at x = -1"),
)


def counterexample(name: str) -> Counterexample:
    for c in COUNTEREXAMPLES:
        if c.name == name:
            return c
    raise KeyError(name)
