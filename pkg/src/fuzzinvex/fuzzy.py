"""Piecewise-linear fuzzy numbers, exact alpha-cuts and endpoint functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ModelError
from .nonsmooth import PiecewiseFn


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"interval with lo={self.lo} > hi={self.hi}")

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __iter__(self):
        yield self.lo
        yield self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def issubset(self, other: "Interval", tol: float = 0.0) -> bool:
        return other.lo - tol <= self.lo and self.hi <= other.hi + tol


def interval_sub_cross(A: Interval, B: Interval) -> Interval:
    """Standard interval difference ``[A.lo - B.hi, A.hi - B.lo]``."""
    return Interval(A.lo - B.hi, A.hi - B.lo)


def interval_sub_hukuhara(A: Interval, B: Interval) -> Interval | None:
    """``C`` with ``B + C == A``, i.e. ``[A.lo - B.lo, A.hi - B.hi]``; None if B is wider."""
    lo, hi = A.lo - B.lo, A.hi - B.hi
    return Interval(lo, hi) if lo <= hi else None


@dataclass(frozen=True)
class FuzzyNumber:
    """Membership function interpolating ``knots`` linearly, zero outside them."""

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        knots = tuple((float(x), float(m)) for x, m in self.knots)
        object.__setattr__(self, "knots", knots)
        if len(knots) < 2:
            raise ValueError("a fuzzy number needs at least two knots")
        xs = [k[0] for k in knots]
        mus = [k[1] for k in knots]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("knot x-coordinates must be strictly increasing")
        if any(not 0.0 <= m <= 1.0 for m in mus):
            raise ValueError("membership values must lie in [0, 1]")
        if mus[0] != 0.0 or mus[-1] != 0.0:
            raise ValueError("first and last knots must have membership 0 (compact support)")
        if max(mus) != 1.0:
            raise ValueError("fuzzy number is not normal: max membership must be 1")
        peak = mus.index(1.0)
        if any(b < a for a, b in zip(mus[: peak + 1], mus[1 : peak + 1])) or \
           any(b > a for a, b in zip(mus[peak:], mus[peak + 1 :])):
            raise ValueError("membership is not quasi-concave; alpha-cuts would not be intervals")

    @property
    def xs(self) -> np.ndarray:
        return np.array([k[0] for k in self.knots])

    @property
    def mus(self) -> np.ndarray:
        return np.array([k[1] for k in self.knots])

    def __repr__(self):
        return "FuzzyNumber(" + ", ".join(f"({x:g},{m:g})" for x, m in self.knots) + ")"


def make_fuzzy(knots: Sequence[tuple[float, float]]) -> FuzzyNumber:
    return FuzzyNumber(tuple(knots))


def triangular(a: float, b: float, c: float) -> FuzzyNumber:
    return FuzzyNumber(((a, 0.0), (b, 1.0), (c, 0.0)))


def crisp_interval(v: float) -> Interval:
    return Interval(float(v), float(v))


def membership(u: FuzzyNumber, x):
    return np.interp(x, u.xs, u.mus, left=0.0, right=0.0)


def alpha_cut(u: FuzzyNumber | float, a: float) -> Interval:
    """Exact level set ``{x : u(x) >= a}``; for ``a == 0`` the closed support."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"alpha level {a} outside [0, 1]")
    if not isinstance(u, FuzzyNumber):
        return crisp_interval(u)
    k = u.knots
    n = len(k)
    if a == 0.0:
        i = next(i for i in range(n) if k[i][1] > 0)
        j = next(j for j in range(n - 1, -1, -1) if k[j][1] > 0)
        return Interval(k[i - 1][0], k[j + 1][0])
    i = next(i for i in range(n) if k[i][1] >= a)
    (x0, m0), (x1, m1) = k[i - 1], k[i]
    lo = x1 if m1 == a else x0 + (a - m0) / (m1 - m0) * (x1 - x0)
    j = next(j for j in range(n - 1, -1, -1) if k[j][1] >= a)
    (x0, m0), (x1, m1) = k[j], k[j + 1]
    hi = x0 if m0 == a else x1 - (a - m1) / (m0 - m1) * (x1 - x0)
    return Interval(lo, hi)


@dataclass(frozen=True)
class FuzzyObjective:
    """``coefficient * shape(x)`` minus ``subtrahend`` (cross interval difference)."""

    coefficient: FuzzyNumber
    shape: PiecewiseFn
    subtrahend: FuzzyNumber | float = 0.0

    def cuts(self, a: float) -> tuple[Interval, Interval]:
        return alpha_cut(self.coefficient, a), alpha_cut(self.subtrahend, a)

    def endpoint_arrays(self, x, a: float) -> tuple[np.ndarray, np.ndarray]:
        """``(f^L(x, a), f^R(x, a))`` vectorized over ``x``."""
        A, B = self.cuts(a)
        s = np.asarray(self.shape(x), dtype=float)
        lo = A.lo * s - B.hi
        hi = A.hi * s - B.lo
        bad = lo > hi
        if np.any(bad):
            xb = np.atleast_1d(np.asarray(x, dtype=float))[np.atleast_1d(bad)][0]
            raise ModelError(f"endpoint inversion f^L > f^R at x={xb}, alpha={a} (shape must be nonnegative)")
        return lo, hi

    def endpoint_fns(self, a: float) -> tuple[PiecewiseFn, PiecewiseFn]:
        A, B = self.cuts(a)
        return (self.shape.affine(A.lo, -B.hi, name=f"fL[{a:g}]"),
                self.shape.affine(A.hi, -B.lo, name=f"fR[{a:g}]"))

    def hukuhara_differs(self, x: float, a: float) -> dict | None:
        """Compare the cross difference with the Hukuhara one at ``(x, a)``."""
        A, B = self.cuts(a)
        s = float(self.shape(x))
        prod = Interval(min(A.lo * s, A.hi * s), max(A.lo * s, A.hi * s))
        cross = interval_sub_cross(prod, B)
        hk = interval_sub_hukuhara(prod, B)
        if hk is not None and (hk.lo, hk.hi) == (cross.lo, cross.hi):
            return None
        return {"x": x, "alpha": a, "cross": [cross.lo, cross.hi],
                "hukuhara": None if hk is None else [hk.lo, hk.hi]}


def eval_endpoints(obj: FuzzyObjective, x: float, a: float) -> Interval:
    lo, hi = obj.endpoint_arrays(float(x), a)
    return Interval(float(lo), float(hi))
