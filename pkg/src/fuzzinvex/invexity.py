"""Grid certification of invexity, pseudoinvexity, quasiinvexity and their V-variants.

Every check is falsification on a finite set of ``(x, u)`` pairs: a failing
pair is returned as a witness, and a pass only means no witness exists on the
sampled pairs, which is why verdicts are labeled ``"pass (sampled)"``.

Directional derivatives are taken through the support function
``f°(u; η) = max ξ·η`` over the subdifferential generators, so the
"for every ξ" clauses become one comparison against the envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ModelError

SCALAR_PROPERTIES = ("invex", "pseudoinvex", "quasiinvex")
VECTOR_PROPERTIES = ("v_invex", "v_pseudoinvex", "v_quasiinvex")
DEFAULT_EPS = 1e-9


@dataclass(frozen=True, order=True)
class Witness:
    x: tuple
    u: tuple
    xi: tuple = ()
    lhs: float = math.nan
    rhs: float = math.nan
    note: str = ""

    def as_dict(self) -> dict:
        return {"x": _plain(self.x), "u": _plain(self.u), "xi": list(self.xi),
                "lhs": self.lhs, "rhs": self.rhs, "note": self.note}


def _witness_key(w: Witness):
    return (w.x, w.u, w.xi, w.note)


def _plain(t: tuple):
    return t[0] if len(t) == 1 else list(t)


@dataclass
class Verdict:
    property: str
    passed: bool
    witnesses: list[Witness] = field(default_factory=list)
    checked_pairs: int = 0
    vacuous: int = 0
    tight: int = 0
    tolerance: float = DEFAULT_EPS
    min_margin: float = math.inf
    reading: str = "envelope"

    def __post_init__(self):
        self.witnesses = sorted(self.witnesses, key=_witness_key)
        if self.passed != (not self.witnesses):
            raise ValueError("a verdict passes exactly when it has no witnesses")

    @property
    def label(self) -> str:
        return "pass (sampled)" if self.passed else "fail"

    def __add__(self, other: "Verdict") -> "Verdict":
        return Verdict(
            property=self.property if self.property == other.property else f"{self.property}+{other.property}",
            passed=self.passed and other.passed,
            witnesses=self.witnesses + other.witnesses,
            checked_pairs=self.checked_pairs + other.checked_pairs,
            vacuous=self.vacuous + other.vacuous,
            tight=self.tight + other.tight,
            tolerance=max(self.tolerance, other.tolerance),
            min_margin=min(self.min_margin, other.min_margin),
            reading=self.reading,
        )

    def as_dict(self, max_witnesses: int | None = 20) -> dict:
        ws = self.witnesses if max_witnesses is None else self.witnesses[:max_witnesses]
        return {"property": self.property, "verdict": self.label, "passed": self.passed,
                "checked_pairs": self.checked_pairs, "vacuous_pairs": self.vacuous,
                "tight_pairs": self.tight, "tolerance": self.tolerance,
                "min_margin": None if math.isinf(self.min_margin) else self.min_margin,
                "reading": self.reading, "witness_count": len(self.witnesses),
                "witnesses": [w.as_dict() for w in ws]}


# -- pair sets ----------------------------------------------------------------

class PairSet:
    """Pairs ``(x, u)`` grouped by ``u`` so each group is evaluated as one array."""

    def __init__(self, groups: Sequence[tuple[np.ndarray, np.ndarray]]):
        self.groups = [(np.atleast_1d(np.asarray(u, dtype=float)), _as_points(xs)) for u, xs in groups]

    @property
    def count(self) -> int:
        return sum(len(xs) for _, xs in self.groups)

    def __len__(self):
        return self.count


def _as_points(xs) -> np.ndarray:
    a = np.asarray(xs, dtype=float)
    return a.reshape(-1, 1) if a.ndim <= 1 else a


def pair_grid(xs, us=None) -> PairSet:
    """Full product ``xs × us`` (``us`` defaults to ``xs``)."""
    us = xs if us is None else us
    us_arr = np.asarray(us, dtype=float)
    us_list = us_arr.reshape(-1, 1) if us_arr.ndim <= 1 else us_arr
    pts = _as_points(xs)  # one shared array so f(xs) is evaluated once
    return PairSet([(u, pts) for u in us_list])


def pair_list(pairs: Iterable[tuple]) -> PairSet:
    groups: dict[tuple, list] = {}
    for x, u in pairs:
        groups.setdefault(tuple(np.atleast_1d(u)), []).append(np.atleast_1d(np.asarray(x, dtype=float)))
    return PairSet([(np.array(u), np.array(xs)) for u, xs in groups.items()])


# -- evaluation helpers ---------------------------------------------------------

def _call_points(fn: Callable, pts: np.ndarray) -> np.ndarray:
    if pts.shape[1] == 1:
        return np.broadcast_to(np.asarray(fn(pts[:, 0]), dtype=float), (len(pts),)).copy()
    return np.array([float(fn(p)) for p in pts])


def _call_u(fn: Callable, u: np.ndarray) -> float:
    return float(fn(float(u[0]) if u.size == 1 else u))


def _eval_map(m: Callable, pts: np.ndarray, u: np.ndarray, what: str) -> np.ndarray:
    """Evaluate ``m(x, u)`` over the group; returns shape ``(k, n)`` (or ``(k,)`` for scalars)."""
    k, n = pts.shape
    try:
        if n == 1:
            with np.errstate(all="ignore"):
                val = np.asarray(m(pts[:, 0], float(u[0])), dtype=float)
            val = np.broadcast_to(val, (k,)).copy()
        else:
            val = np.array([np.asarray(m(p, u), dtype=float) for p in pts])
    except Exception as exc:  # report the group rather than a bare traceback
        raise ModelError(f"{what} evaluation failed at u={_plain(tuple(u))}: {exc}") from exc
    bad = ~np.isfinite(val)
    if bad.any():
        i = int(np.argwhere(bad.reshape(k, -1).any(axis=1))[0][0])
        raise ModelError(f"{what} evaluation failed at pair x={_plain(tuple(pts[i]))}, u={_plain(tuple(u))}")
    return val


def _eta_matrix(eta: Callable, pts: np.ndarray, u: np.ndarray) -> np.ndarray:
    val = _eval_map(eta, pts, u, "eta")
    return val.reshape(len(pts), -1)


def _gen_products(f, u: np.ndarray, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows of ``ξ·η`` for every generator ξ of ``∂f(u)``: shape ``(k, g)`` plus generators."""
    P = f.subdiff(float(u[0]) if u.size == 1 else u)
    G = P.array()
    if G.shape[1] != E.shape[1]:
        raise ModelError(f"eta has dimension {E.shape[1]} but the subdifferential has dimension {G.shape[1]}")
    return E @ G.T, G


def _pair(pts: np.ndarray, i: int, u: np.ndarray) -> tuple[tuple, tuple]:
    return tuple(pts[i].tolist()), tuple(u.tolist())


class _PointCache:
    """Reuses ``f(xs)`` across groups that share the same x-array (product grids)."""

    def __init__(self):
        self._store: dict = {}

    def __call__(self, f, pts: np.ndarray) -> np.ndarray:
        key = (id(f), id(pts))
        if key not in self._store:
            self._store[key] = (pts, _call_points(f, pts))
        return self._store[key][1]


def _is_vacuous(E: np.ndarray, gens: Sequence[np.ndarray], eps: float) -> np.ndarray:
    eta_zero = np.all(np.abs(E) <= eps, axis=1)
    zero_sub = all(len(G) == 1 and np.all(np.abs(G) <= eps) for G in gens)
    return eta_zero & zero_sub


# -- scalar certification -------------------------------------------------------

def certify_scalar(prop: str, f, eta: Callable, pairs: PairSet, eps: float = DEFAULT_EPS,
                   reading: str = "envelope") -> Verdict:
    """Check one of ``invex``, ``pseudoinvex``, ``quasiinvex`` on every pair.

    ``reading`` only affects pseudoinvexity: ``"envelope"`` tests the
    antecedent with ``f°(u;η) = max ξ·η``; ``"existential"`` lets the best ξ
    be chosen, so the antecedent becomes ``min ξ·η >= 0``.
    """
    if prop not in SCALAR_PROPERTIES:
        raise ValueError(f"unknown scalar property {prop!r}; expected one of {SCALAR_PROPERTIES}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if reading not in ("envelope", "existential"):
        raise ValueError(f"unknown reading {reading!r}")
    witnesses: list[Witness] = []
    vacuous = tight = 0
    margin = math.inf
    cache = _PointCache()
    for u, pts in pairs.groups:
        fu = _call_u(f, u)
        d = cache(f, pts) - fu
        E = _eta_matrix(eta, pts, u)
        prods, G = _gen_products(f, u, E)
        fo = prods.max(axis=1)
        fmin = prods.min(axis=1)
        top = prods.argmax(axis=1)
        vac = np.zeros(len(pts), bool) if prop == "invex" else _is_vacuous(E, [G], eps)
        vacuous += int(vac.sum())
        if prop == "invex":
            slack = d - fo
            bad = slack < -eps
            tight += int(np.sum(np.abs(slack) <= eps))
            margin = min(margin, float(slack.min()))
            lhs, rhs, note = d, fo, "f(x)-f(u) < xi*eta"
        elif prop == "pseudoinvex":
            ante = (fo if reading == "envelope" else fmin) >= -eps
            bad = ante & (d < -eps) & ~vac
            if ante.any():
                margin = min(margin, float(d[ante].min()))
            lhs, rhs, note = fo if reading == "envelope" else fmin, d, "antecedent holds but f(x) < f(u)"
        else:
            ante = d <= eps
            bad = ante & (fo > eps) & ~vac
            if ante.any():
                margin = min(margin, float(-fo[ante].max()))
            lhs, rhs, note = d, fo, "f(x) <= f(u) but f°(u;eta) > 0"
        idx = np.flatnonzero(bad)
        if idx.size:
            u_ = tuple(u.tolist())
            gens = [tuple(g) for g in G.tolist()]
            witnesses.extend(Witness(tuple(x), u_, gens[t], l, r, note) for x, t, l, r in
                             zip(pts[idx].tolist(), top[idx].tolist(), lhs[idx].tolist(), rhs[idx].tolist()))
    return Verdict(prop, not witnesses, witnesses, pairs.count, vacuous, tight, eps, margin,
                   reading if prop == "pseudoinvex" else "envelope")


# -- vector certification ---------------------------------------------------------

def certify_vector(prop: str, F: Sequence, eta: Callable, beta: Sequence[Callable] | None,
                   pairs: PairSet, eps: float = DEFAULT_EPS, reading: str = "envelope") -> Verdict:
    """V-invexity and its pseudo/quasi variants with scalings ``beta`` (default all 1)."""
    if prop not in VECTOR_PROPERTIES:
        raise ValueError(f"unknown vector property {prop!r}; expected one of {VECTOR_PROPERTIES}")
    if not F:
        raise ValueError("F needs at least one component")
    if beta is None:
        beta = [_unit_beta] * len(F)
    if len(beta) != len(F):
        raise ModelError(f"{len(beta)} beta components for {len(F)} functions")
    if reading not in ("envelope", "existential"):
        raise ValueError(f"unknown reading {reading!r}")
    witnesses: list[Witness] = []
    vacuous = tight = 0
    margin = math.inf
    cache = _PointCache()
    for u, pts in pairs.groups:
        E = _eta_matrix(eta, pts, u)
        ds, fos, fmins, tops, gens, betas = [], [], [], [], [], []
        for i, (f, b) in enumerate(zip(F, beta)):
            ds.append(cache(f, pts) - _call_u(f, u))
            prods, G = _gen_products(f, u, E)
            fos.append(prods.max(axis=1))
            fmins.append(prods.min(axis=1))
            tops.append(prods.argmax(axis=1))
            gens.append(G)
            bv = _eval_map(b, pts, u, f"beta_{i + 1}").reshape(len(pts))
            if np.any(bv <= 0):
                j = int(np.flatnonzero(bv <= 0)[0])
                x_, u_ = _pair(pts, j, u)
                raise ModelError(f"beta_{i + 1} is not positive at x={_plain(x_)}, u={_plain(u_)}")
            betas.append(bv)
        D, FO, FMIN, B = map(np.array, (ds, fos, fmins, betas))
        vac = _is_vacuous(E, gens, eps)
        if prop == "v_invex":
            slack = D - B * FO
            comp_bad = slack < -eps
            bad = comp_bad.any(axis=0)
            tight += int(np.sum(np.all(np.abs(slack) <= eps, axis=0)))
            margin = min(margin, float(slack.min()))
            lhs_all, rhs_all = D, B * FO
        elif prop == "v_pseudoinvex":
            ante_v = (FO if reading == "envelope" else FMIN).sum(axis=0)
            wsum = (B * D).sum(axis=0)
            ante = ante_v >= -eps
            bad = ante & (wsum < -eps) & ~vac
            if ante.any():
                margin = min(margin, float(wsum[ante].min()))
        else:
            wsum = (B * D).sum(axis=0)
            fsum = FO.sum(axis=0)
            ante = wsum <= eps
            bad = ante & (fsum > eps) & ~vac
            if ante.any():
                margin = min(margin, float(-fsum[ante].max()))
        vacuous += int(vac.sum()) if prop != "v_invex" else 0
        for j in np.flatnonzero(bad):
            x_, u_ = _pair(pts, j, u)
            xi = tuple(float(v) for G, t in zip(gens, tops) for v in G[t[j]])
            if prop == "v_invex":
                i = int(np.argmin(D[:, j] - B[:, j] * FO[:, j]))
                w = Witness(x_, u_, xi, float(lhs_all[i, j]), float(rhs_all[i, j]),
                            f"component {i + 1}: f(x)-f(u) < beta*xi*eta")
            elif prop == "v_pseudoinvex":
                w = Witness(x_, u_, xi, float(ante_v[j]), float(wsum[j]),
                            "sum xi*eta >= 0 but sum beta*(f(x)-f(u)) < 0")
            else:
                w = Witness(x_, u_, xi, float(wsum[j]), float(fsum[j]),
                            "sum beta*(f(x)-f(u)) <= 0 but sum xi*eta > 0")
            witnesses.append(w)
    return Verdict(prop, not witnesses, witnesses, pairs.count, vacuous, tight, eps, margin,
                   reading if prop == "v_pseudoinvex" else "envelope")


def _unit_beta(x, u):
    return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0


def constant_beta(c: float) -> Callable:
    def beta(x, u):
        return np.full(np.shape(x)[:1] or (), float(c)) if np.ndim(x) else float(c)
    return beta


def certify(prop: str, F, eta: Callable, pairs: PairSet, beta=None, eps: float = DEFAULT_EPS,
            reading: str = "envelope") -> Verdict:
    """Dispatch on the property name; scalar properties take a single function."""
    if prop in SCALAR_PROPERTIES:
        f = F[0] if isinstance(F, (list, tuple)) else F
        return certify_scalar(prop, f, eta, pairs, eps, reading)
    return certify_vector(prop, list(F) if isinstance(F, (list, tuple)) else [F], eta, beta, pairs, eps, reading)


# -- scaling construction for pseudoinvex components ------------------------------

def corollary_beta(F: Sequence, eta: Callable) -> list[Callable]:
    """Scalings making componentwise pseudoinvex functions V-invex.

    ``beta_i(x;u) = (f_i(x)-f_i(u)) / f_i°(u;η)`` when both have the same
    strict sign, and 1 otherwise.  With the envelope f° this ratio makes the
    V-invex inequality tight for the worst generator.
    """
    def make(f):
        cache: dict[float, object] = {}

        def beta(x, u):
            uf = float(u) if np.ndim(u) == 0 else tuple(np.atleast_1d(u))
            if uf not in cache:
                cache[uf] = f.subdiff(u).array()
            G = cache[uf]
            xa = np.atleast_1d(np.asarray(x, dtype=float))
            d = np.asarray(f(xa), dtype=float) - float(f(u))
            e = np.asarray(eta(xa, u), dtype=float).reshape(len(xa), -1)
            fo = (e @ G.T).max(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(fo != 0, d / fo, 1.0)
            out = np.where((ratio > 0) & np.isfinite(ratio) & (d != 0), ratio, 1.0)
            return out if np.ndim(x) else float(out[0])
        return beta

    return [make(f) for f in F]
