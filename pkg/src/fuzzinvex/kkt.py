"""KKT verification and multiplier search over subdifferential polytopes.

The inclusion checked is

    0 ∈ λ1·P_L + λ2·P_R + Σ_{j∈J(u)} μ_j·P_gj + Σ_k θ_k·P_hk

with λ > 0, μ ≥ 0 and θ free.  With the multipliers fixed it is a convex
feasibility question.  For the search, ``μ_j`` times a convex combination of
generators is the same as a nonnegative (cone) combination of them, so
every product becomes a single linear variable and the problem is an LP.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InfeasiblePointError, KKTInputError
from .nonsmooth import Polytope, distance_to_zero
from .simplex import solve_lp

LAMBDA_FLOOR = 1e-6
CS_TOL = 1e-9


def active_set(g: Sequence, u, tol: float = 1e-9) -> tuple[int, ...]:
    """Indices (0-based) of constraints with ``|g_j(u)| <= tol``."""
    arg = float(np.ravel(u)[0]) if np.size(u) == 1 else np.asarray(u, dtype=float)
    vals = [float(gj(arg)) for gj in g]
    bad = [j for j, v in enumerate(vals) if v > tol]
    if bad:
        detail = ", ".join(f"g{j + 1}(u)={vals[j]:.6g}" for j in bad)
        raise InfeasiblePointError(f"u is infeasible: {detail}", violating=bad)
    return tuple(j for j, v in enumerate(vals) if abs(v) <= tol)


@dataclass(frozen=True)
class MultiplierSet:
    lambda1: float
    lambda2: float
    mu: tuple[float, ...] = ()
    theta: tuple[float, ...] = ()
    selections: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {"lambda": [self.lambda1, self.lambda2], "mu": list(self.mu), "theta": list(self.theta),
                "selections": {k: list(v) for k, v in sorted(self.selections.items())}}


@dataclass
class KKTReport:
    feasible: bool
    multipliers: MultiplierSet | None
    residual: float
    flags: list[str] = field(default_factory=list)
    sum_interval: tuple[float, float] | None = None

    def as_dict(self) -> dict:
        return {"feasible": self.feasible, "residual": self.residual, "flags": list(self.flags),
                "multipliers": None if self.multipliers is None else self.multipliers.as_dict(),
                "sum_interval": None if self.sum_interval is None else list(self.sum_interval)}


def _check_dims(polys: Sequence[Polytope]) -> int:
    dims = {P.dim for P in polys}
    if len(dims) != 1:
        raise KKTInputError(f"polytopes of mixed dimension {sorted(dims)}")
    return dims.pop()


def _inactive(constraint_values, m: int, tol: float) -> set[int]:
    if constraint_values is None:
        return set()
    if len(constraint_values) != m:
        raise KKTInputError(f"{len(constraint_values)} constraint values for {m} constraints")
    bad = [j for j, v in enumerate(constraint_values) if v > tol]
    if bad:
        raise InfeasiblePointError("u is infeasible for constraints " + ", ".join(f"g{j + 1}" for j in bad), bad)
    return {j for j, v in enumerate(constraint_values) if abs(v) > tol}


def kkt_verify(objective_polys: tuple[Polytope, Polytope], constraint_polys: Sequence[Polytope],
               eq_polys: Sequence[Polytope], m: MultiplierSet, tol: float = 1e-9,
               constraint_values: Sequence[float] | None = None) -> KKTReport:
    """Decide ``0 ∈ λ1 P_L + λ2 P_R + Σ μ_j P_gj + Σ θ_k P_hk`` for fixed multipliers.

    ``constraint_values`` (the ``g_j(u)``) enable the complementary-slackness
    check; inactive constraints are then left out of the sum.  The residual is
    the 1-norm distance from the origin to the sum.
    """
    PL, PR = objective_polys
    polys = [PL, PR, *constraint_polys, *eq_polys]
    dim = _check_dims(polys)
    if len(m.mu) != len(constraint_polys) or len(m.theta) != len(eq_polys):
        raise KKTInputError(f"expected {len(constraint_polys)} mu and {len(eq_polys)} theta values, "
                            f"got {len(m.mu)} and {len(m.theta)}")
    if not (m.lambda1 > 0 and m.lambda2 > 0):
        raise KKTInputError(f"lambda must be positive, got ({m.lambda1}, {m.lambda2})")
    neg = [j for j, v in enumerate(m.mu) if v < 0]
    if neg:
        raise KKTInputError("mu must be nonnegative: " + ", ".join(f"mu{j + 1}={m.mu[j]}" for j in neg))
    flags = []
    inactive = _inactive(constraint_values, len(constraint_polys), tol)
    for j in sorted(inactive):
        if abs(m.mu[j] * constraint_values[j]) > CS_TOL:
            raise KKTInputError(f"complementary slackness violated: mu{j + 1}*g{j + 1}(u) = "
                                f"{m.mu[j] * constraint_values[j]:.6g}")
        flags.append(f"g{j + 1} inactive, excluded")
    terms = [(m.lambda1, PL, "xi_L"), (m.lambda2, PR, "xi_R")]
    terms += [(m.mu[j], P, f"zeta_{j + 1}") for j, P in enumerate(constraint_polys) if j not in inactive]
    terms += [(m.theta[k], P, f"varsigma_{k + 1}") for k, P in enumerate(eq_polys)]
    residual, sel = _min_distance(terms, dim)
    interval = None
    if dim == 1:
        lo = sum(min(c * P.lo, c * P.hi) for c, P, _ in terms)
        hi = sum(max(c * P.lo, c * P.hi) for c, P, _ in terms)
        interval = (lo, hi)
    feasible = residual <= tol
    ms = MultiplierSet(m.lambda1, m.lambda2, tuple(m.mu), tuple(m.theta), sel if feasible else {})
    return KKTReport(feasible, ms if feasible else None, residual, flags, interval)


def _min_distance(terms, dim: int) -> tuple[float, dict]:
    """Distance from 0 to the weighted sum, plus a selection attaining it.

    Terms whose polytope contains 0 get the selection 0 whenever the rest of
    the sum still reaches the same distance, which keeps reported
    subgradients readable.
    """
    residual, sel = _distance_lp(terms, dim)
    zeroed = []
    for t, (_, P, name) in enumerate(terms):
        if not _has_zero(P):
            continue
        rest = [term for i, term in enumerate(terms) if i != t and i not in zeroed]
        if not rest:
            continue
        r2, sel2 = _distance_lp(rest, dim)
        if r2 <= residual:
            zeroed.append(t)
            sel = dict(sel2)
            for i in zeroed:
                sel[terms[i][2]] = (0.0,) * dim
    return residual, {name: sel[name] for _, _, name in terms}


def _has_zero(P: Polytope) -> bool:
    return distance_to_zero(P) == 0


def _distance_lp(terms, dim: int) -> tuple[float, dict]:
    """LP: convex weights per polytope, free residual split in ±; minimize Σ|r|."""
    cols = []  # (term index, generator)
    for t, (_, P, _) in enumerate(terms):
        cols.extend((t, g) for g in P.generators)
    nw = len(cols)
    A, b = [], []
    for d in range(dim):
        row = [Fraction(terms[t][0]) * Fraction(g[d]) for t, g in cols]
        row += [Fraction(int(i == d)) for i in range(dim)] + [Fraction(-int(i == d)) for i in range(dim)]
        A.append(row)
        b.append(0)
    for t in range(len(terms)):
        A.append([int(tt == t) for tt, _ in cols] + [0] * (2 * dim))
        b.append(1)
    c = [0] * nw + [1] * (2 * dim)
    res = solve_lp(c, A, b)
    w = res.x
    sel = {}
    for t, (_, P, name) in enumerate(terms):
        xi = [sum((w[k] * Fraction(g[d]) for k, (tt, g) in enumerate(cols) if tt == t), Fraction(0))
              for d in range(dim)]
        sel[name] = tuple(float(v) for v in xi)
    return float(res.objective), sel


def kkt_solve(objective_polys: tuple[Polytope, Polytope], constraint_polys: Sequence[Polytope],
              eq_polys: Sequence[Polytope], lambda_mode="normalized", tol: float = 1e-9,
              constraint_values: Sequence[float] | None = None) -> KKTReport:
    """Search for multipliers making the KKT inclusion hold.

    ``lambda_mode`` is ``"normalized"`` (λ1+λ2 = 1, each λ_i >= 1e-6) or
    ``("fixed", (λ1, λ2))``.  Among feasible multipliers the one with the
    least total mass ``Σμ + Σ|θ|`` is returned.  Each sign pattern of θ is
    tried separately so that θ_k·P_hk stays a single ray cone.
    """
    PL, PR = objective_polys
    polys = [PL, PR, *constraint_polys, *eq_polys]
    dim = _check_dims(polys)
    if isinstance(lambda_mode, str):
        if lambda_mode != "normalized":
            raise KKTInputError(f"unknown lambda mode {lambda_mode!r}")
        fixed = None
    else:
        kind, lam = lambda_mode
        if kind != "fixed" or len(lam) != 2:
            raise KKTInputError(f"bad lambda mode {lambda_mode!r}")
        fixed = (float(lam[0]), float(lam[1]))
        if not (fixed[0] > 0 and fixed[1] > 0):
            raise KKTInputError(f"lambda must be positive, got {fixed}")
    inactive = _inactive(constraint_values, len(constraint_polys), tol)
    flags = [f"g{j + 1} inactive, excluded" for j in sorted(inactive)]
    best = None
    if fixed is None:
        # a balanced weighting reads best; the floor-constrained search is the fallback
        half = kkt_solve(objective_polys, constraint_polys, eq_polys, ("fixed", (0.5, 0.5)), tol, constraint_values)
        if half.feasible:
            return half
    for signs in itertools.product((1, -1), repeat=len(eq_polys)):
        sol = _solve_pattern(PL, PR, constraint_polys, eq_polys, signs, fixed, inactive, dim)
        if sol is not None and (best is None or sol[0] < best[0]):
            best = sol
        if not eq_polys:
            break
    if best is None:
        return KKTReport(False, None, math.inf, flags + ["no multipliers exist"])
    _, ms = best
    if fixed is None and min(ms.lambda1, ms.lambda2) <= LAMBDA_FLOOR * (1 + 1e-9):
        flags.append("lambda on the 1e-6 floor")
    check = kkt_verify(objective_polys, constraint_polys, eq_polys, ms, tol, constraint_values)
    if not check.feasible:
        flags.append("round-trip verification failed")
    return KKTReport(check.feasible, check.multipliers or ms, check.residual, flags, check.sum_interval)


def _solve_pattern(PL, PR, gpolys, hpolys, signs, fixed, inactive, dim):
    # column blocks: (kind, index, generator, scale)
    cols = []
    if fixed is None:
        cols += [("L", 0, g, 1) for g in PL.generators]
        cols += [("R", 0, g, 1) for g in PR.generators]
    else:
        cols += [("L", 0, g, Fraction(fixed[0])) for g in PL.generators]
        cols += [("R", 0, g, Fraction(fixed[1])) for g in PR.generators]
    cols += [("g", j, g, 1) for j, P in enumerate(gpolys) if j not in inactive for g in P.generators]
    cols += [("h", k, g, signs[k]) for k, P in enumerate(hpolys) for g in P.generators]
    n = len(cols)
    slack = 2 if fixed is None else 0
    A, b = [], []
    for d in range(dim):
        A.append([Fraction(s) * Fraction(g[d]) for _, _, g, s in cols] + [0] * slack)
        b.append(0)
    ind = lambda kind: [int(c[0] == kind) for c in cols]  # noqa: E731
    if fixed is None:
        A.append([a + r for a, r in zip(ind("L"), ind("R"))] + [0, 0])
        b.append(1)
        A.append(ind("L") + [-1, 0])
        b.append(Fraction(LAMBDA_FLOOR))
        A.append(ind("R") + [0, -1])
        b.append(Fraction(LAMBDA_FLOOR))
    else:
        A.append(ind("L"))
        b.append(1)
        A.append(ind("R"))
        b.append(1)
    cost = [int(c[0] in "gh") for c in cols] + [0] * slack
    res = solve_lp(cost, A, b)
    if res.status != "optimal":
        return None
    x = res.x

    def mass_and_sel(kind, idx, P):
        ks = [i for i, c in enumerate(cols) if c[0] == kind and c[1] == idx]
        mass = sum((x[i] for i in ks), Fraction(0))
        if mass == 0:
            return Fraction(0), P.generators[0]
        xi = tuple(float(sum((x[i] * Fraction(cols[i][2][d]) for i in ks), Fraction(0)) / mass) for d in range(dim))
        return mass, xi

    mL, xiL = mass_and_sel("L", 0, PL)
    mR, xiR = mass_and_sel("R", 0, PR)
    lam1, lam2 = (float(mL), float(mR)) if fixed is None else fixed
    mu, theta, sel = [], [], {"xi_L": xiL, "xi_R": xiR}
    for j, P in enumerate(gpolys):
        if j in inactive:
            mu.append(0.0)
            continue
        mass, xi = mass_and_sel("g", j, P)
        mu.append(float(mass))
        sel[f"zeta_{j + 1}"] = xi
    for k, P in enumerate(hpolys):
        mass, xi = mass_and_sel("h", k, P)
        theta.append(float(signs[k] * mass))
        sel[f"varsigma_{k + 1}"] = xi
    return res.objective, MultiplierSet(lam1, lam2, tuple(mu), tuple(theta), sel)
