"""A small expression language with numpy evaluation and symbolic derivatives.

Grammar (standard precedence, ``^`` right-associative, unary minus binds
looser than ``^`` so ``-x^2`` is ``-(x^2)``)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary (('^' | '**') unary)?
    primary := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'
             | 'piecewise' '{' branch (';' branch)* [';'] '}'
    branch  := '[' expr ',' expr ']' ':' expr

Nonsmooth primitives are ``abs``, ``min``, ``max`` and ``piecewise``.  On an
interval where none of them switches branch, :meth:`Expr.resolve` returns an
equivalent smooth tree that :meth:`Expr.diff` can differentiate exactly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ExprSyntaxError, UnknownIdentifierError

FUNCTIONS = {"abs": 1, "ln": 1, "exp": 1, "min": 2, "max": 2}
CONSTANTS = {"e": math.e, "pi": math.pi, "inf": math.inf}


class Expr:
    """Base node.  Subclasses are frozen dataclasses, so ``==`` is structural."""

    def evaluate(self, env: Mapping[str, object]):
        raise NotImplementedError

    def diff(self, var: str) -> "Expr":
        raise NotImplementedError

    def resolve(self, env: Mapping[str, float]) -> "Expr":
        """Replace nonsmooth primitives by the branch active at ``env``."""
        raise NotImplementedError

    def children(self) -> tuple["Expr", ...]:
        return ()

    def walk(self) -> Iterator["Expr"]:
        yield self
        for c in self.children():
            yield from c.walk()

    def variables(self) -> set[str]:
        return {n.name for n in self.walk() if isinstance(n, Var)}

    def breakpoints(self) -> list[float]:
        """Boundaries declared by ``piecewise`` nodes anywhere in the tree."""
        pts: set[float] = set()
        for n in self.walk():
            if isinstance(n, Piecewise):
                for lo, hi, _ in n.branches:
                    pts.update((lo, hi))
        return sorted(p for p in pts if math.isfinite(p))

    def is_smooth(self) -> bool:
        for n in self.walk():
            if isinstance(n, Piecewise):
                return False
            if isinstance(n, Call) and n.name in ("abs", "min", "max"):
                return False
        return True

    def __str__(self) -> str:
        return _fmt(self)

    def __call__(self, **env):
        return self.evaluate(env)

    # operator sugar keeps derivative code readable
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __neg__(self):
        return neg(self)


def _lift(v) -> Expr:
    return v if isinstance(v, Expr) else Num(float(v))


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def diff(self, var):
        return ZERO

    def resolve(self, env):
        return self


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise UnknownIdentifierError(f"no value bound for variable '{self.name}'") from None

    def diff(self, var):
        return ONE if self.name == var else ZERO

    def resolve(self, env):
        return self


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def diff(self, var):
        return neg(self.arg.diff(var))

    def resolve(self, env):
        return Neg(self.arg.resolve(env))


_BINOPS: dict[str, Callable] = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "^":
            return _power(a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            return _BINOPS[self.op](a, b)

    def diff(self, var):
        a, b = self.left, self.right
        da, db = a.diff(var), b.diff(var)
        if self.op == "+":
            return add(da, db)
        if self.op == "-":
            return sub(da, db)
        if self.op == "*":
            return add(mul(da, b), mul(a, db))
        if self.op == "/":
            return div(sub(mul(da, b), mul(a, db)), power(b, Num(2.0)))
        # power
        if var not in b.variables():
            # d(a^c) = c a^(c-1) a'
            return mul(mul(b, power(a, sub(b, ONE))), da)
        return mul(self, add(mul(db, Call("ln", (a,))), div(mul(b, da), a)))

    def resolve(self, env):
        return BinOp(self.op, self.left.resolve(env), self.right.resolve(env))


def _power(a, b):
    with np.errstate(divide="ignore", invalid="ignore"):
        if np.ndim(b) == 0 and float(b).is_integer() and np.ndim(a) == 0:
            # exact integer powers of negative bases
            return float(a) ** int(b) if b >= 0 or a != 0 else math.inf
        return np.power(a, b)


@dataclass(frozen=True, eq=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]

    def children(self):
        return self.args

    def evaluate(self, env):
        vals = [a.evaluate(env) for a in self.args]
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.name == "abs":
                return np.abs(vals[0])
            if self.name == "ln":
                return np.log(vals[0])
            if self.name == "exp":
                return np.exp(vals[0])
            if self.name == "min":
                return np.minimum(vals[0], vals[1])
            if self.name == "max":
                return np.maximum(vals[0], vals[1])
            if self.name == "sign":
                return np.sign(vals[0])
        raise UnknownIdentifierError(f"unknown function '{self.name}'")

    def diff(self, var):
        a = self.args[0]
        da = a.diff(var)
        if self.name == "ln":
            return div(da, a)
        if self.name == "exp":
            return mul(self, da)
        if self.name == "abs":
            # valid away from zeros of the argument only
            return mul(Call("sign", (a,)), da)
        if self.name == "sign":
            return ZERO
        raise ValueError(f"'{self.name}' is not differentiable; resolve() the expression first")

    def resolve(self, env):
        args = tuple(a.resolve(env) for a in self.args)
        if self.name == "abs":
            v = float(args[0].evaluate(env))
            return args[0] if v >= 0 else Neg(args[0])
        if self.name in ("min", "max"):
            va, vb = (float(x.evaluate(env)) for x in args)
            pick_first = va <= vb if self.name == "min" else va >= vb
            return args[0] if pick_first else args[1]
        return Call(self.name, args)


@dataclass(frozen=True, eq=True)
class Piecewise(Expr):
    """Branches ``(lo, hi, expr)``; the first branch containing x wins."""

    branches: tuple[tuple[float, float, Expr], ...]
    var: str = "x"

    def children(self):
        return tuple(b[2] for b in self.branches)

    def evaluate(self, env):
        x = env[self.var]
        if np.ndim(x) == 0:
            for lo, hi, e in self.branches:
                if lo <= x <= hi:
                    return e.evaluate(env)
            return math.nan
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, np.nan)
        done = np.zeros(x.shape, dtype=bool)
        for lo, hi, e in self.branches:
            m = (x >= lo) & (x <= hi) & ~done
            if m.any():
                sub_env = {k: (v[m] if np.ndim(v) and np.shape(v) == x.shape else v) for k, v in env.items()}
                out[m] = e.evaluate(sub_env)
                done |= m
        return out

    def diff(self, var):
        return Piecewise(tuple((lo, hi, e.diff(var)) for lo, hi, e in self.branches), self.var)

    def resolve(self, env):
        x = float(env[self.var])
        for lo, hi, e in self.branches:
            if lo <= x <= hi:
                return e.resolve(env)
        raise ValueError(f"{self.var}={x} is outside every piecewise branch")


ZERO = Num(0.0)
ONE = Num(1.0)


# -- light simplification while building derivative trees -------------------

def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    return BinOp("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if _is(b, 1):
        return a
    if _is(b, 0):
        return ONE
    return BinOp("^", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


# -- pretty printer ----------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG_PREC
    return 5


def _num(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _fmt(e: Expr) -> str:
    if isinstance(e, Num):
        s = _num(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = _fmt(e.arg)
        if _prec(e.arg) < _NEG_PREC:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(_fmt(a) for a in e.args)})"
    if isinstance(e, Piecewise):
        parts = [f"[{_num(lo)}, {_num(hi)}]: {_fmt(x)}" for lo, hi, x in e.branches]
        return "piecewise{ " + "; ".join(parts) + " }"
    assert isinstance(e, BinOp)
    p = _PREC[e.op]
    left, right = _fmt(e.left), _fmt(e.right)
    if e.op == "^":
        if _prec(e.left) <= p:
            left = f"({left})"
        if _prec(e.right) < _NEG_PREC:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p and not isinstance(e.right, Neg):
        right = f"({right})"
    return f"{left} {e.op} {right}"


# -- tokenizer and parser ----------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),\[\]{}:;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _position(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            line, col = _position(text, pos)
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, col, text)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group(kind)
            toks.append(_Tok(kind, "^" if tok == "**" else tok, pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, variables: Sequence[str] | None):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.variables = None if variables is None else set(variables)

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: _Tok, cls=ExprSyntaxError):
        line, col = _position(self.text, tok.pos)
        raise cls(msg, line, col, self.text)

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text or t.kind == "num":
            self.error(f"expected '{text}' but found {t.text or 'end of input'!r}", t)
        return t

    def parse(self) -> Expr:
        if self.peek().kind == "eof":
            self.error("empty expression", self.peek())
        e = self.expr()
        t = self.peek()
        if t.kind != "eof":
            self.error(f"unexpected {t.text!r}", t)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.next()
            e = BinOp(op.text, e, self.term(after=op))
        return e

    def term(self, after: _Tok | None = None) -> Expr:
        e = self.unary(after)
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.next()
            e = BinOp(op.text, e, self.unary(after=op))
        return e

    def unary(self, after: _Tok | None = None) -> Expr:
        t = self.peek()
        if t.kind == "op" and t.text in ("-", "+"):
            self.next()
            arg = self.unary(after=t)
            return Neg(arg) if t.text == "-" else arg
        return self.power(after)

    def power(self, after: _Tok | None = None) -> Expr:
        base = self.primary(after)
        if self.peek().text == "^" and self.peek().kind == "op":
            op = self.next()
            return BinOp("^", base, self.unary(after=op))
        return base

    def primary(self, after: _Tok | None = None) -> Expr:
        t = self.next()
        if t.kind == "num":
            return Num(float(t.text))
        if t.kind == "name":
            if t.text == "piecewise":
                return self.piecewise(t)
            if self.peek().text == "(":
                return self.call(t)
            if t.text in CONSTANTS and (self.variables is None or t.text not in self.variables):
                return Num(CONSTANTS[t.text])
            if self.variables is not None and t.text not in self.variables:
                self.error(f"unknown identifier '{t.text}'", t, UnknownIdentifierError)
            return Var(t.text)
        if t.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if after is not None and t.kind in ("op", "eof"):
            # report at the operator that is missing its operand
            self.error(f"operator '{after.text}' is missing its right operand "
                       f"(found {t.text or 'end of input'!r})", after)
        self.error(f"expected an operand but found {t.text or 'end of input'!r}", t)

    def call(self, name: _Tok) -> Expr:
        if name.text not in FUNCTIONS:
            self.error(f"unknown function '{name.text}'", name, UnknownIdentifierError)
        self.expect("(")
        args = [self.expr()]
        while self.peek().text == ",":
            self.next()
            args.append(self.expr())
        self.expect(")")
        if len(args) != FUNCTIONS[name.text]:
            self.error(f"'{name.text}' takes {FUNCTIONS[name.text]} argument(s), got {len(args)}", name)
        return Call(name.text, tuple(args))

    def constant(self) -> float:
        t = self.peek()
        e = self.expr()
        if e.variables():
            self.error("piecewise bounds must be constants", t)
        return float(e.evaluate({}))

    def piecewise(self, kw: _Tok) -> Expr:
        self.expect("{")
        branches = []
        while True:
            self.expect("[")
            lo = self.constant()
            self.expect(",")
            hi = self.constant()
            close = self.expect("]")
            if not lo <= hi:
                self.error(f"empty branch interval [{lo}, {hi}]", close)
            self.expect(":")
            branches.append((lo, hi, self.expr()))
            if self.peek().text == ";":
                self.next()
            if self.peek().text == "}":
                self.next()
                break
            if self.peek().text != "[":
                self.error(f"expected '[' or '}}' in piecewise but found {self.peek().text!r}", self.peek())
        pvars = set()
        for _, _, e in branches:
            pvars |= e.variables()
        var = "x" if not pvars or "x" in pvars else sorted(pvars)[0]
        return Piecewise(tuple(branches), var)


def parse_expression(text: str, variables: Sequence[str] | None = None) -> Expr:
    """Parse ``text``; with ``variables`` given, other identifiers are errors."""
    return _Parser(text, variables).parse()


class ExprFn:
    """A parsed expression bound to an ordered tuple of variable names.

    ``ExprFn(parse_expression("x - u"), ("x", "u"))(1.0, 0.5) == 0.5``.
    Single-letter multivariate points are accepted for ``x1..xn`` variables.
    """

    def __init__(self, expr: Expr | str, variables: Sequence[str] = ("x",)):
        self.variables = tuple(variables)
        self.expr = parse_expression(expr, self.variables) if isinstance(expr, str) else expr
        self.source = str(self.expr)

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments, got {len(args)}")
        env = dict(zip(self.variables, args))
        return self.expr.evaluate(env)

    def __repr__(self):
        return f"ExprFn({self.source!r}, {self.variables})"
