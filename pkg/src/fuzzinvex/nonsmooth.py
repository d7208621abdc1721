"""Clarke subdifferentials of piecewise-C1 functions.

In one dimension the Clarke subdifferential at a declared breakpoint is the
interval spanned by the one-sided derivative limits (the convex hull of the
limiting gradients); at interior smooth points it is the derivative.  For
general locally Lipschitz functions in any dimension,
:func:`estimate_limiting_gradients` samples finite-difference gradients near
the point and returns their hull as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, ModelError
from .expr import Expr, Piecewise, parse_expression
from .simplex import solve_lp

BREAK_TOL = 1e-12


@dataclass(frozen=True)
class Polytope:
    """Convex hull of finitely many generators.

    One-dimensional polytopes are kept canonical as ``((lo,), (hi,))`` or a
    single generator when ``lo == hi``.
    """

    generators: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        gens = tuple(tuple(float(c) + 0.0 for c in g) for g in self.generators)
        if not gens:
            raise ValueError("a polytope needs at least one generator")
        dim = len(gens[0])
        if any(len(g) != dim for g in gens):
            raise ValueError("generators of mixed dimension")
        if dim == 1:
            lo = min(g[0] for g in gens)
            hi = max(g[0] for g in gens)
            gens = ((lo,),) if lo == hi else ((lo,), (hi,))
        object.__setattr__(self, "generators", gens)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Polytope":
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        return cls(((lo,), (hi,)))

    @classmethod
    def point(cls, *coords: float) -> "Polytope":
        return cls((tuple(coords),))

    @classmethod
    def from_points(cls, pts: Iterable[Sequence[float] | float]) -> "Polytope":
        return cls(tuple((p,) if np.ndim(p) == 0 else tuple(p) for p in pts))

    @property
    def dim(self) -> int:
        return len(self.generators[0])

    @property
    def lo(self) -> float:
        self._require_1d()
        return self.generators[0][0]

    @property
    def hi(self) -> float:
        self._require_1d()
        return self.generators[-1][0]

    def _require_1d(self):
        if self.dim != 1:
            raise ValueError("interval endpoints only exist for 1-D polytopes")

    def is_singleton(self) -> bool:
        return len(self.generators) == 1

    def array(self) -> np.ndarray:
        return np.array(self.generators, dtype=float)

    def scale(self, c: float) -> "Polytope":
        return Polytope(tuple(tuple(c * v for v in g) for g in self.generators))

    def __add__(self, other: "Polytope") -> "Polytope":
        if self.dim != other.dim:
            raise ValueError("Minkowski sum of polytopes of different dimension")
        return Polytope(tuple(tuple(a + b for a, b in zip(g, h))
                              for g in self.generators for h in other.generators))

    def __repr__(self):
        if self.dim == 1:
            return f"Polytope[{self.lo!r}, {self.hi!r}]"
        return f"Polytope({self.generators!r})"


def minkowski_sum(polys: Sequence[Polytope], coeffs: Sequence[float] | None = None) -> Polytope:
    """``sum_i coeffs[i] * polys[i]``; 1-D sums stay two generators."""
    if not polys:
        raise ValueError("empty Minkowski sum")
    coeffs = [1.0] * len(polys) if coeffs is None else list(coeffs)
    total = polys[0].scale(coeffs[0])
    for p, c in zip(polys[1:], coeffs[1:]):
        total = total + p.scale(c)
    return total


def directional_derivative(P: Polytope, d) -> float:
    """Support function ``max_{xi in P} xi . d`` (attained at a generator)."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if d.shape != (P.dim,):
        raise ValueError(f"direction of dimension {d.size} for a {P.dim}-D polytope")
    return float(max(float(np.dot(g, d)) for g in P.generators))


def distance_to_zero(P: Polytope) -> float:
    """1-norm distance from the origin to ``P`` (exact LP in n-D)."""
    if P.dim == 1:
        return max(0.0, P.lo, -P.hi)
    G = P.array()
    k, n = G.shape
    # vars: weights w (k), r+ (n), r- (n); min sum r
    c = [0] * k + [1] * (2 * n)
    A = [list(G[:, d]) + [int(i == d) for i in range(n)] + [-int(i == d) for i in range(n)] for d in range(n)]
    A.append([1] * k + [0] * (2 * n))
    b = [0] * n + [1]
    res = solve_lp(c, A, b)
    return float(res.objective)


def contains_zero(P: Polytope, tol: float = 1e-9) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return distance_to_zero(P) <= tol


def zero_margin(P: Polytope) -> float:
    """Signed margin: positive depth of 0 inside a 1-D interval, minus its distance otherwise."""
    if P.dim == 1:
        return min(-P.lo, P.hi)
    return -distance_to_zero(P)


# -- piecewise C1 functions --------------------------------------------------

@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    func: Callable
    deriv: Callable | None = None
    label: str = ""


def _richardson_one_sided(func: Callable, x: float, side: int, span: float) -> float:
    """One-sided derivative limit by forward/backward differences + Richardson."""
    h = min(1e-2, span / 4) if math.isfinite(span) else 1e-2
    levels = 5
    table = []
    for k in range(levels):
        hk = h / 2 ** k
        table.append(side * (func(x + side * hk) - func(x)) / hk)
    # eliminate O(h), O(h^2), ... successively
    for j in range(1, levels):
        table = [(2 ** j * table[i + 1] - table[i]) / (2 ** j - 1) for i in range(len(table) - 1)]
    return float(table[0])


class PiecewiseFn:
    """A continuous scalar function, C1 on each closed piece.

    Pieces are ordered, contiguous and agree at shared breakpoints.  Only the
    declared piece boundaries are treated as kinks.
    """

    def __init__(self, pieces: Sequence[Piece], name: str = "f", source: str | None = None):
        if not pieces:
            raise ValueError("PiecewiseFn needs at least one piece")
        self.pieces = tuple(pieces)
        self.name = name
        self.source = source
        for p in self.pieces:
            if not p.lo < p.hi:
                raise ValueError(f"degenerate piece [{p.lo}, {p.hi}]")
        for a, b in zip(self.pieces, self.pieces[1:]):
            if a.hi != b.lo:
                raise ValueError(f"pieces [{a.lo}, {a.hi}] and [{b.lo}, {b.hi}] are not contiguous")
            va, vb = float(a.func(a.hi)), float(b.func(b.lo))
            if abs(va - vb) > 1e-9 * (1 + abs(va)):
                raise ModelError(f"{name} is discontinuous at x={a.hi}: {va} vs {vb}")

    # construction ---------------------------------------------------------
    @classmethod
    def smooth(cls, func: Callable, deriv: Callable | None = None,
               domain: tuple[float, float] = (-math.inf, math.inf), name: str = "f") -> "PiecewiseFn":
        return cls([Piece(domain[0], domain[1], func, deriv)], name=name)

    @classmethod
    def from_expr(cls, expr: Expr | str, domain: tuple[float, float] = (-math.inf, math.inf),
                  knots: Iterable[float] = (), name: str = "f", var: str = "x") -> "PiecewiseFn":
        """Split ``expr`` at declared knots and ``piecewise`` boundaries.

        On each piece the nonsmooth primitives are resolved at an interior
        point, giving a smooth tree with an exact symbolic derivative.  A
        resolved tree that disagrees with the original inside the piece means
        a kink was not declared, which is a model error.
        """
        if isinstance(expr, str):
            expr = parse_expression(expr, (var,))
        lo, hi = domain
        for node in expr.walk():
            if isinstance(node, Piecewise):
                lo = max(lo, min(b[0] for b in node.branches))
                hi = min(hi, max(b[1] for b in node.branches))
        if not lo < hi:
            raise ModelError(f"{name}: empty domain [{lo}, {hi}]")
        cuts = sorted({k for k in list(knots) + expr.breakpoints() if lo < k < hi})
        edges = [lo] + cuts + [hi]
        pieces = []
        for a, b in zip(edges, edges[1:]):
            samples = _interior_samples(a, b)
            mid = samples[len(samples) // 2]
            if expr.is_smooth():
                smooth = expr
            else:
                smooth = expr.resolve({var: mid})
                full = np.array([float(expr.evaluate({var: t})) for t in samples])
                part = np.array([float(smooth.evaluate({var: t})) for t in samples])
                if np.any(np.abs(full - part) > 1e-9 * (1 + np.abs(full))):
                    raise ModelError(f"{name}: undeclared kink inside ({a}, {b}); declare it as a knot")
            d = smooth.diff(var)
            pieces.append(Piece(a, b, _bind(smooth, var), _bind(d, var), label=str(smooth)))
        return cls(pieces, name=name, source=str(expr))

    # evaluation -----------------------------------------------------------
    @property
    def domain(self) -> tuple[float, float]:
        return self.pieces[0].lo, self.pieces[-1].hi

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(p.hi for p in self.pieces[:-1])

    def _check_domain(self, x):
        lo, hi = self.domain
        xa = np.asarray(x, dtype=float)
        if np.any(xa < lo - BREAK_TOL * (1 + abs(lo) if math.isfinite(lo) else 1)) or \
           np.any(xa > hi + BREAK_TOL * (1 + abs(hi) if math.isfinite(hi) else 1)):
            raise DomainError(f"{self.name}: point outside domain [{lo}, {hi}]")

    def __call__(self, x):
        self._check_domain(x)
        if np.ndim(x) == 0:
            return float(self._piece_at(float(x)).func(float(x)))
        xa = np.asarray(x, dtype=float)
        out = np.empty(xa.shape)
        done = np.zeros(xa.shape, dtype=bool)
        for i, p in enumerate(self.pieces):
            lo = -math.inf if i == 0 else p.lo
            hi = math.inf if i == len(self.pieces) - 1 else p.hi
            m = (xa >= lo) & (xa <= hi) & ~done
            if m.any():
                out[m] = np.broadcast_to(p.func(xa[m]), xa[m].shape)
                done |= m
        return out

    def _piece_at(self, x: float) -> Piece:
        for p in self.pieces:
            if x <= p.hi:
                return p
        return self.pieces[-1]

    def _deriv(self, p: Piece, x: float, side: int) -> float:
        if p.deriv is not None:
            return float(p.deriv(x))
        span = p.hi - p.lo
        return _richardson_one_sided(p.func, x, side, span)

    def one_sided(self, x: float) -> tuple[float | None, float | None]:
        """Left and right derivative limits at ``x`` (None outside the domain side)."""
        self._check_domain(x)
        lo, hi = self.domain
        left = right = None
        for p in self.pieces:
            if p.lo < x <= p.hi + BREAK_TOL * (1 + abs(x)) and x > lo:
                left = self._deriv(p, min(x, p.hi), -1)
                break
        for p in self.pieces:
            if p.lo - BREAK_TOL * (1 + abs(x)) <= x < p.hi and x < hi:
                right = self._deriv(p, max(x, p.lo), +1)
                break
        return left, right

    def subdiff(self, x: float) -> Polytope:
        return clarke_subdiff_1d(self, x)

    def affine(self, scale: float, shift: float = 0.0, name: str | None = None) -> "PiecewiseFn":
        """``scale * f + shift`` with derivatives scaled exactly."""
        pieces = []
        for p in self.pieces:
            f = _affine(p.func, scale, shift)
            d = None if p.deriv is None else _affine(p.deriv, scale, 0.0)
            pieces.append(Piece(p.lo, p.hi, f, d, p.label))
        label = name or f"{scale!r}*{self.name}{shift:+}"
        return PiecewiseFn(pieces, name=label, source=self.source)

    def __repr__(self):
        return f"PiecewiseFn({self.name}, domain={self.domain}, breakpoints={self.breakpoints})"


def _affine(fn: Callable, a: float, b: float) -> Callable:
    def g(x):
        return a * fn(x) + b
    return g


def _bind(e: Expr, var: str) -> Callable:
    def f(x):
        return e.evaluate({var: x})
    return f


def _interior_samples(a: float, b: float, n: int = 9) -> list[float]:
    if math.isfinite(a) and math.isfinite(b):
        return [a + (b - a) * (k + 1) / (n + 1) for k in range(n)]
    if math.isfinite(a):
        return [a + 10.0 ** (k - 4) for k in range(n)]
    if math.isfinite(b):
        return [b - 10.0 ** (4 - k) for k in range(n)]
    return [float(t) for t in np.linspace(-10, 10, n)]


def clarke_subdiff_1d(f: PiecewiseFn, x: float) -> Polytope:
    """Exact Clarke subdifferential of a 1-D piecewise-C1 function.

    At a declared breakpoint the result is the interval between the one-sided
    derivative limits; elsewhere it is the singleton derivative.  At an end of
    the domain only the available one-sided limit exists.
    """
    left, right = f.one_sided(float(x))
    vals = [v for v in (left, right) if v is not None]
    if not vals:
        raise DomainError(f"{f.name}: no derivative information at x={x}")
    at_break = any(abs(x - b) <= BREAK_TOL * (1 + abs(b)) for b in f.breakpoints)
    if not at_break:
        # smooth interior point: both sides come from the same piece
        return Polytope.point(vals[-1] if right is not None else vals[0])
    return Polytope.from_points(vals)


# -- sampled limiting gradients -----------------------------------------------

def limiting_gradient_history(f: Callable, x, radii: Sequence[float], samples: int = 64,
                              seed: int = 0) -> list[Polytope]:
    """Hull of finite-difference gradients sampled in shrinking shells around ``x``.

    Sample points keep a distance of at least ``r/2`` from ``x`` and use a
    central-difference step ``r/4``, so no difference quotient straddles
    ``x`` itself.  One polytope per radius, in the order given.
    """
    if samples < 2:
        raise ValueError("at least 2 samples are required")
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and strictly decreasing")
    scalar = np.ndim(x) == 0
    x0 = np.atleast_1d(np.asarray(x, dtype=float))
    n = x0.size
    call = (lambda y: f(float(y[0]))) if scalar else f
    rng = np.random.default_rng(seed)
    history = []
    for r in radii:
        h = r / 4
        grads = []
        if n == 1:
            half = samples // 2
            offsets = [r * (0.5 + 0.5 * k / max(half - 1, 1)) for k in range(half)]
            pts = [x0 + o for o in offsets] + [x0 - o for o in offsets[: samples - half]]
        else:
            dirs = rng.normal(size=(samples, n))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            rad = r * (0.5 + 0.5 * rng.random(samples))
            pts = [x0 + d * t for d, t in zip(dirs, rad)]
        for y in pts:
            g = np.empty(n)
            for i in range(n):
                e = np.zeros(n)
                e[i] = h
                g[i] = (call(y + e) - call(y - e)) / (2 * h)
            grads.append(tuple(g))
        history.append(Polytope(tuple(grads)))
    return history


def estimate_limiting_gradients(f: Callable, x, radii: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
                                samples: int = 64, seed: int = 0) -> Polytope:
    """Estimated Clarke subdifferential at ``x`` from the smallest radius.

    A heuristic cross-check for :func:`clarke_subdiff_1d`, not an exact method.
    """
    return limiting_gradient_history(f, x, radii, samples, seed)[-1]


class OracleFn:
    """A locally Lipschitz function of any dimension for the n-D code paths.

    ``generators(u)`` may supply the subdifferential generators directly;
    otherwise they are estimated from sampled gradients.
    """

    def __init__(self, func: Callable, generators: Callable | None = None, name: str = "f",
                 radii: Sequence[float] = (1e-3, 1e-5), samples: int = 32):
        self.func = func
        self.generators = generators
        self.name = name
        self.radii = radii
        self.samples = samples

    def __call__(self, x):
        return self.func(x)

    def subdiff(self, u) -> Polytope:
        if self.generators is not None:
            return Polytope.from_points(self.generators(u))
        return estimate_limiting_gradients(self.func, u, self.radii, self.samples)
