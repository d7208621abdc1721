"""Dominance, brute-force Pareto fronts on grids, weighted sums and Geoffrion audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import ModelError
from .invexity import Verdict, Witness
from .nonsmooth import Polytope, contains_zero
from .simplex import solve_lp

EQ_TOL = 1e-9
DEFAULT_POINTS = 101


def dominates(a, b, mode: str = "pareto", tol: float = 0.0) -> bool:
    """``a`` dominates ``b`` (minimization).

    ``pareto``: ``a <= b`` everywhere with one strict; ``weak``: ``a < b`` everywhere.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors of different length: {a.size} vs {b.size}")
    if mode == "pareto":
        return bool(np.all(a <= b + tol) and np.any(a < b - tol))
    if mode == "weak":
        return bool(np.all(a < b - tol))
    raise ValueError(f"unknown dominance mode {mode!r}")


@dataclass
class VMP:
    """Vector minimization over a finite grid of candidate points."""

    objectives: list[Callable]
    points: np.ndarray
    constraints_ineq: list[Callable] = field(default_factory=list)
    constraints_eq: list[Callable] = field(default_factory=list)
    tol: float = 1e-9

    def __post_init__(self):
        if not self.objectives:
            raise ValueError("a VMP needs at least one objective")
        pts = np.asarray(self.points, dtype=float)
        self.points = pts.reshape(-1, 1) if pts.ndim <= 1 else pts
        if len(self.points) == 0:
            raise ValueError("empty grid")
        self._values = None
        self._feasible = None

    @classmethod
    def from_box(cls, objectives, box: Sequence[tuple[float, float]], n: int = DEFAULT_POINTS, **kw) -> "VMP":
        axes = [np.linspace(lo, hi, n) for lo, hi in box]
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(list(objectives), np.stack([m.ravel() for m in mesh], axis=1), **kw)

    @property
    def p(self) -> int:
        return len(self.objectives)

    def _eval(self, fn) -> np.ndarray:
        pts = self.points
        if pts.shape[1] == 1:
            return np.broadcast_to(np.asarray(fn(pts[:, 0]), dtype=float), (len(pts),)).copy()
        return np.array([float(fn(x)) for x in pts])

    def values(self) -> np.ndarray:
        """Objective matrix, shape ``(N, p)``."""
        if self._values is None:
            self._values = np.stack([self._eval(f) for f in self.objectives], axis=1)
        return self._values

    def feasible_mask(self) -> np.ndarray:
        if self._feasible is None:
            m = np.ones(len(self.points), dtype=bool)
            for g in self.constraints_ineq:
                m &= self._eval(g) <= self.tol
            for h in self.constraints_eq:
                m &= np.abs(self._eval(h)) <= EQ_TOL
            self._feasible = m
        return self._feasible

    def index_of(self, u, tol: float = 1e-12) -> int:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        dist = np.max(np.abs(self.points - u), axis=1)
        i = int(np.argmin(dist))
        if dist[i] > tol * (1 + np.max(np.abs(u))):
            raise ValueError(f"point {u.tolist()} is not on the grid")
        return i

    def evaluate_at(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        arg = float(u[0]) if u.size == 1 else u
        return np.array([float(f(arg)) for f in self.objectives])

    def is_feasible(self, u) -> bool:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        arg = float(u[0]) if u.size == 1 else u
        return all(float(g(arg)) <= self.tol for g in self.constraints_ineq) and \
            all(abs(float(h(arg))) <= EQ_TOL for h in self.constraints_eq)


@dataclass
class GridSet:
    points: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    empty_feasible: bool = False

    def __len__(self):
        return len(self.indices)

    def contains(self, u, tol: float = 1e-12) -> bool:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return bool(len(self.points)) and bool(np.any(np.max(np.abs(self.points - u), axis=1) <= tol))

    def as_list(self) -> list:
        return [float(p[0]) if len(p) == 1 else [float(v) for v in p] for p in self.points]


def _dominated_mask(V: np.ndarray, mode: str, chunk: int = 512) -> np.ndarray:
    """For each row of ``V``, whether some other row dominates it."""
    n = len(V)
    out = np.zeros(n, dtype=bool)
    for s in range(0, n, chunk):
        B = V[s : s + chunk]
        if mode == "pareto":
            le = np.all(V[None, :, :] <= B[:, None, :], axis=2)
            lt = np.any(V[None, :, :] < B[:, None, :], axis=2)
            dom = le & lt
        elif mode == "weak":
            dom = np.all(V[None, :, :] < B[:, None, :], axis=2)
        else:
            raise ValueError(f"unknown dominance mode {mode!r}")
        out[s : s + chunk] = dom.any(axis=1)
    return out


def pareto_front(P: VMP, mode: str = "pareto") -> GridSet:
    """Feasible grid points not dominated by any other feasible grid point."""
    feas = np.flatnonzero(P.feasible_mask())
    if feas.size == 0:
        return GridSet(P.points[:0], feas, P.values()[:0], empty_feasible=True)
    V = P.values()[feas]
    keep = feas[~_dominated_mask(V, mode)]
    return GridSet(P.points[keep], keep, P.values()[keep])


def weighted_argmin(P: VMP, w: Sequence[float], rel_tol: float = 1e-12) -> GridSet:
    """All feasible grid minimizers of ``Σ w_i f_i`` (ties within ``rel_tol`` kept)."""
    w = np.asarray(w, dtype=float)
    if w.shape != (P.p,):
        raise ValueError(f"weight vector of length {w.size} for {P.p} objectives")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative and not all zero")
    feas = np.flatnonzero(P.feasible_mask())
    if feas.size == 0:
        raise ModelError("weighted_argmin: the feasible set is empty on this grid")
    s = P.values()[feas] @ w
    best = s.min()
    keep = feas[s <= best + rel_tol * max(1.0, abs(best))]
    return GridSet(P.points[keep], keep, P.values()[keep])


def geoffrion_bound(lam: Sequence[float]) -> float:
    """Trade-off bound ``(p-1) · max_{i,j} λ_j/λ_i`` for strictly positive weights."""
    lam = [float(v) for v in lam]
    if any(v <= 0 for v in lam):
        raise ValueError("the bound needs strictly positive weights")
    p = len(lam)
    return (p - 1) * max(lam) / min(lam)


def geoffrion_audit(P: VMP, u, M: float, tol: float = 1e-9) -> Verdict:
    """Check bounded trade-offs at ``u`` against every feasible grid point.

    For each x and each i with ``f_i(x) < f_i(u)`` some j must have
    ``f_j(x) > f_j(u)`` with ``(f_i(u)-f_i(x)) / (f_j(x)-f_j(u)) <= M``.
    """
    iu = P.index_of(u)
    if not P.feasible_mask()[iu]:
        raise ModelError(f"u={u} is infeasible")
    prop = f"geoffrion(M={M:g})"
    front = pareto_front(P, "pareto")
    if iu not in set(front.indices.tolist()):
        uu = tuple(float(v) for v in P.points[iu])
        return Verdict(prop, False, [Witness(uu, uu, note="not efficient")], 0, tolerance=tol)
    fu = P.values()[iu]
    feas = np.flatnonzero(P.feasible_mask())
    witnesses = []
    worst = 0.0
    for k in feas:
        fx = P.values()[k]
        gain = fu - fx
        loss = fx - fu
        for i in np.flatnonzero(gain > 0):
            js = [j for j in range(P.p) if j != i and loss[j] > 0]
            if not js:
                witnesses.append(Witness(tuple(float(v) for v in P.points[k]), tuple(float(v) for v in P.points[iu]), (), float(gain[i]), math.inf,
                                         f"objective {i + 1} improves with no compensating loss"))
                continue
            ratio = min(gain[i] / loss[j] for j in js)
            worst = max(worst, float(ratio))
            if ratio > M + tol:
                witnesses.append(Witness(tuple(float(v) for v in P.points[k]), tuple(float(v) for v in P.points[iu]),
                                         (), float(ratio), float(M), f"trade-off ratio for objective {i + 1} exceeds M"))
    return Verdict(prop, not witnesses, witnesses, len(feas), tolerance=tol, min_margin=float(M - worst))


def stationarity_weights(subdiffs: Sequence[Polytope]) -> tuple[list[float], list[tuple[float, ...]]] | None:
    """Find ``τ >= 0`` with ``Σ τ = 1`` and selections ``ξ_i ∈ ∂_i`` such that ``Σ τ_i ξ_i = 0``.

    A single subdifferential containing zero is preferred (τ a unit vector).
    Otherwise the bilinear ``τ_i ξ_i`` is written as a cone combination
    ``Σ_k v_ik g_ik`` with ``Σ_ik v_ik = 1``, which is linear.  Returns
    ``(τ, ξ)`` or None when infeasible.
    """
    if not subdiffs:
        raise ValueError("no subdifferentials given")
    dim = subdiffs[0].dim
    if any(P.dim != dim for P in subdiffs):
        raise ValueError("subdifferentials of different dimension")
    p = len(subdiffs)
    for i, P in enumerate(subdiffs):
        if contains_zero(P, 0.0):
            tau = [float(k == i) for k in range(p)]
            xis = [(0.0,) * dim if k == i else P.generators[0] for k, P in enumerate(subdiffs)]
            return tau, xis
    cols = [(i, g) for i, P in enumerate(subdiffs) for g in P.generators]
    A = [[g[d] for _, g in cols] for d in range(dim)] + [[1] * len(cols)]
    b = [0] * dim + [1]
    res = solve_lp([0] * len(cols), A, b)
    if res.status != "optimal":
        return None
    v = res.x
    tau_f = [sum((v[k] for k, (i, _) in enumerate(cols) if i == j), Fraction(0)) for j in range(p)]
    xis = []
    for j, P in enumerate(subdiffs):
        if tau_f[j] == 0:
            xis.append(P.generators[0])
            continue
        xi = [sum((v[k] * Fraction(g[d]) for k, (i, g) in enumerate(cols) if i == j), Fraction(0)) / tau_f[j]
              for d in range(dim)]
        xis.append(tuple(float(c) for c in xi))
    return [float(t) for t in tau_f], xis
