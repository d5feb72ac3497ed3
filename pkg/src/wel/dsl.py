"""Closed-form coordinate expressions evaluated on second-order jets.

The grammar is ordinary infix arithmetic::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') unary)?        # right associative
    atom   := number | name | name '(' expr ')' | '(' expr ')'

Exponents must fold to rational constants.  Names resolve, in order, to
chart coordinates, numeric parameters, the constant ``pi``, and finally to
unary functions (the built-in primitives plus any externally supplied
:class:`UnivariateFunction`, e.g. an ODE trajectory).

Evaluation works on floats or on :class:`Jet` values; a jet carries the value,
gradient and Hessian and propagates them exactly through every node.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ArityError, DomainError, ParseError, UnknownIdentifierError

EPS = np.finfo(float).eps
_COS_FLOOR = 1e-14


# --------------------------------------------------------------------------- jets


class Jet:
    """Value, gradient and Hessian of a scalar at a point (optionally third derivatives)."""

    __slots__ = ("val", "grad", "hess", "third")

    def __init__(self, val, grad, hess, third=None):
        self.val = float(val)
        self.grad = grad
        self.hess = hess
        self.third = third

    @property
    def n(self):
        return self.grad.shape[0]

    @property
    def order(self):
        return 2 if self.third is None else 3

    @classmethod
    def constant(cls, value, n):
        return cls(value, np.zeros(n), np.zeros((n, n)))

    @classmethod
    def variable(cls, value, index, n):
        g = np.zeros(n)
        g[index] = 1.0
        return cls(value, g, np.zeros((n, n)))

    def apply(self, f0, f1, f2):
        """Chain rule for a unary map with derivatives ``f0, f1, f2`` at ``self.val``."""
        g = self.grad
        return Jet(f0, f1 * g, f1 * self.hess + f2 * np.outer(g, g))

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.n)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val, self.grad - other.grad, self.hess - other.hess)
        return Jet(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            cross = np.outer(a.grad, b.grad)
            return Jet(
                a.val * b.val,
                a.val * b.grad + b.val * a.grad,
                a.val * b.hess + b.val * a.hess + cross + cross.T,
            )
        return Jet(self.val * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.val
        if v == 0.0:
            raise DomainError("division by zero")
        return self.apply(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if other == 0:
            raise DomainError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __repr__(self):
        return f"Jet(val={self.val!r}, grad={self.grad.tolist()}, hess={self.hess.tolist()})"


# --------------------------------------------------------------------------- primitives


def _sin(x):
    s, c = math.sin(x), math.cos(x)
    return s, c, -s


def _cos(x):
    s, c = math.sin(x), math.cos(x)
    return c, -s, -c


def _check_cos(x, name):
    c = math.cos(x)
    if abs(c) < _COS_FLOOR:
        raise DomainError(f"{name} is singular at {x!r}", name)
    return c


def _tan(x):
    c = _check_cos(x, "tan")
    t = math.sin(x) / c
    sec2 = 1.0 / (c * c)
    return t, sec2, 2.0 * sec2 * t


def _sec(x):
    c = _check_cos(x, "sec")
    sec = 1.0 / c
    t = math.sin(x) / c
    return sec, sec * t, sec * (2.0 * t * t + 1.0)


def _exp(x):
    e = math.exp(x)
    return e, e, e


def _log(x):
    if not x > 0.0:
        raise DomainError(f"log of non-positive value {x!r}", "log")
    return math.log(x), 1.0 / x, -1.0 / (x * x)


def _sqrt(x):
    if not x > 0.0:
        if x == 0.0:
            raise DomainError("sqrt is not differentiable at 0", "sqrt")
        raise DomainError(f"sqrt of negative value {x!r}", "sqrt")
    r = math.sqrt(x)
    return r, 0.5 / r, -0.25 / (r * x)


def _abs(x):
    if x == 0.0:
        raise DomainError("abs is not differentiable at 0", "abs")
    s = 1.0 if x > 0 else -1.0
    return abs(x), s, 0.0


PRIMITIVES: dict[str, Callable[[float], tuple[float, float, float]]] = {
    "sin": _sin,
    "cos": _cos,
    "tan": _tan,
    "sec": _sec,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
    "abs": _abs,
}

# value-only versions that accept the boundary points where derivatives fail
_VALUE_ONLY = {
    "sqrt": lambda x: math.sqrt(x) if x >= 0 else _sqrt(x)[0],
    "abs": abs,
}


class UnivariateFunction:
    """A named external function of one variable with derivatives up to order two.

    Subclasses implement :meth:`derivatives`.  Instances are used inside
    expressions exactly like ``sin`` or ``exp``.
    """

    name: str = "f"

    def derivatives(self, x: float) -> tuple[float, float, float]:
        raise NotImplementedError

    def __call__(self, x: float) -> float:
        return self.derivatives(x)[0]


class CallableFunction(UnivariateFunction):
    """Wrap a plain ``x -> (f, f', f'')`` callable."""

    def __init__(self, name, fn):
        self.name = name
        self._fn = fn

    def derivatives(self, x):
        return tuple(float(v) for v in self._fn(x))


def _rpow_parts(x: float, p: Fraction):
    """x**p for real x and rational p, with real odd roots of negatives."""
    if p.denominator == 1:
        k = p.numerator
        if x == 0.0 and k < 0:
            raise DomainError("zero raised to a negative power", "^")
        return x**k
    if x < 0.0:
        if p.denominator % 2 == 0:
            raise DomainError(f"even root of negative value {x!r}", "^")
        sign = -1.0 if p.numerator % 2 else 1.0
        return sign * (-x) ** float(p)
    if x == 0.0:
        if p < 0:
            raise DomainError("zero raised to a negative power", "^")
        return 0.0
    return x ** float(p)


def _pow_derivs(x: float, p: Fraction):
    f0 = _rpow_parts(x, p)
    f1 = 0.0 if p == 0 else float(p) * _rpow_parts(x, p - 1)
    q = p * (p - 1)
    f2 = 0.0 if q == 0 else float(q) * _rpow_parts(x, p - 2)
    return f0, f1, f2


# --------------------------------------------------------------------------- AST

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


class Expr:
    """Base AST node.  Nodes are immutable."""

    prec = _PREC_ATOM

    def evaluate(self, env):
        raise NotImplementedError

    def names(self) -> set[str]:
        return set()

    def functions(self) -> dict[str, object]:
        return {}

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def evaluate(self, env):
        return self.value


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def names(self):
        return {self.name}


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr
    prec = _PREC_NEG

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def names(self):
        return self.arg.names()

    def functions(self):
        return self.arg.functions()


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def prec(self):
        return _PREC_ADD if self.op in "+-" else _PREC_MUL

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if isinstance(b, Jet):
            return a / b
        if b == 0.0:
            raise DomainError("division by zero", "/")
        return a / b

    def names(self):
        return self.left.names() | self.right.names()

    def functions(self):
        return {**self.left.functions(), **self.right.functions()}


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction
    prec = _PREC_POW

    def evaluate(self, env):
        b = self.base.evaluate(env)
        if isinstance(b, Jet):
            return b.apply(*_pow_derivs(b.val, self.exponent))
        return _rpow_parts(b, self.exponent)

    def names(self):
        return self.base.names()

    def functions(self):
        return self.base.functions()


@dataclass(frozen=True, eq=True)
class Call(Expr):
    fname: str
    arg: Expr
    fn: object = None  # external UnivariateFunction, None for built-ins

    def evaluate(self, env):
        x = self.arg.evaluate(env)
        try:
            if isinstance(x, Jet):
                if self.fn is not None:
                    return x.apply(*self.fn.derivatives(x.val))
                return x.apply(*PRIMITIVES[self.fname](x.val))
            if self.fn is not None:
                return float(self.fn.derivatives(x)[0])
            if self.fname in _VALUE_ONLY:
                return _VALUE_ONLY[self.fname](x)
            return PRIMITIVES[self.fname](x)[0]
        except DomainError as exc:
            raise DomainError(f"{exc} in {to_source(self)}", node=self) from None

    def names(self):
        return self.arg.names()

    def functions(self):
        out = self.arg.functions()
        if self.fn is not None:
            out[self.fname] = self.fn
        return out


# --------------------------------------------------------------------------- printing


def _fmt_const(v: float) -> str:
    s = repr(float(v))
    if s in ("inf", "-inf", "nan"):
        raise ValueError(f"cannot print non-finite constant {s}")
    return f"({s})" if v < 0 or s.startswith("-") else s


def _fmt_exponent(p: Fraction) -> str:
    if p.denominator == 1 and p >= 0:
        return str(p.numerator)
    return f"({p.numerator}/{p.denominator})" if p.denominator != 1 else f"({p.numerator})"


def to_source(e: Expr) -> str:
    """Canonical printer; ``parse(to_source(e))`` rebuilds an identical tree."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        if e.arg.prec < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, BinOp):
        left = to_source(e.left)
        right = to_source(e.right)
        if e.left.prec < e.prec:
            left = f"({left})"
        if e.right.prec <= e.prec:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    if isinstance(e, Pow):
        base = to_source(e.base)
        if e.base.prec <= _PREC_POW or (isinstance(e.base, Const) and e.base.value < 0):
            base = f"({base})"
        return f"{base}^{_fmt_exponent(e.exponent)}"
    if isinstance(e, Call):
        return f"{e.fname}({to_source(e.arg)})"
    raise TypeError(f"unknown node {e!r}")


# --------------------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


class _Parser:
    def __init__(self, source, coords, params, functions):
        self.source = source
        self.coords = set(coords)
        self.params = dict(params or {})
        self.functions = dict(functions or {})
        self.tokens = self._tokenize(source)
        self.i = 0

    def _byte(self, char_offset):
        return len(self.source[:char_offset].encode("utf-8"))

    def _tokenize(self, src):
        out = []
        pos = 0
        while pos < len(src):
            if src[pos:].strip() == "":
                break
            m = _TOKEN.match(src, pos)
            if not m or m.end() == pos:
                bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
                raise ParseError(f"unexpected character {src[bad]!r}", src, self._byte(bad))
            kind = m.lastgroup
            start = m.start(kind)
            out.append((kind, m.group(kind), start))
            pos = m.end()
        out.append(("end", "", len(src)))
        return out

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None, cls=ParseError):
        tok = tok or self.peek()
        return cls(msg, self.source, self._byte(tok[2]))

    def expect(self, text):
        tok = self.take()
        if tok[1] != text:
            raise self.error(f"expected {text!r}, found {tok[1] or 'end of input'!r}", tok)

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            arg = self.unary()
            # fold literal negatives so printed constants re-parse to the same node
            if isinstance(arg, Const):
                return Const(-arg.value)
            return Neg(arg)
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("^", "**"):
            self.take()
            exp_tok = self.peek()
            exponent = self.unary()
            value = _fold_rational(exponent)
            if value is None:
                raise self.error("exponent must be a rational constant", exp_tok)
            return Pow(base, value)
        return base

    def atom(self):
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if self.peek()[1] == "(":
                return self.call(tok)
            if text in self.coords:
                return Var(text)
            if text in self.params:
                return Const(float(self.params[text]))
            if text == "pi":
                return Const(math.pi)
            if text in PRIMITIVES or text in self.functions:
                raise self.error(f"function {text!r} used without an argument", tok, ArityError)
            raise self.error(f"unknown identifier {text!r}", tok, UnknownIdentifierError)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise self.error(f"unexpected token {text or 'end of input'!r}", tok)

    def call(self, tok):
        name = tok[1]
        if name in PRIMITIVES:
            fn = None
        elif name in self.functions:
            fn = self.functions[name]
        elif name in self.coords or name in self.params or name == "pi":
            raise self.error(f"{name!r} is not a function", tok, ArityError)
        else:
            raise self.error(f"unknown function {name!r}", tok, UnknownIdentifierError)
        self.expect("(")
        if self.peek()[1] == ")":
            raise self.error(f"{name}() takes exactly one argument, got none", tok, ArityError)
        arg = self.expr()
        if self.peek()[1] == ",":
            raise self.error(f"{name}() takes exactly one argument", tok, ArityError)
        self.expect(")")
        return Call(name, arg, fn)


def _fold_rational(e: Expr):
    """Fold a constant expression into a Fraction, or None."""
    if isinstance(e, Const):
        return Fraction(repr(e.value)) if math.isfinite(e.value) else None
    if isinstance(e, Neg):
        v = _fold_rational(e.arg)
        return None if v is None else -v
    if isinstance(e, BinOp):
        a, b = _fold_rational(e.left), _fold_rational(e.right)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return None if b == 0 else a / b
    if isinstance(e, Pow):
        a = _fold_rational(e.base)
        if a is None or e.exponent.denominator != 1:
            return None
        return a**e.exponent.numerator if not (a == 0 and e.exponent < 0) else None
    return None


def parse(
    source: str,
    coords: Sequence[str],
    params: Mapping[str, float] | None = None,
    functions: Mapping[str, UnivariateFunction] | None = None,
) -> Expr:
    """Parse ``source`` into an AST over the coordinate names ``coords``."""
    if not isinstance(source, str):
        raise ParseError(f"expression must be a string, got {type(source).__name__}", str(source), 0)
    return _Parser(source, coords, params, functions).parse()


# --------------------------------------------------------------------------- evaluation


def evaluate(expr: Expr, coords: Sequence[str], point: Sequence[float]) -> float:
    env = {name: float(x) for name, x in zip(coords, point)}
    return float(expr.evaluate(env))


def _jet2(expr: Expr, coords: Sequence[str], point: np.ndarray) -> Jet:
    n = len(coords)
    env = {name: Jet.variable(point[i], i, n) for i, name in enumerate(coords)}
    out = expr.evaluate(env)
    if not isinstance(out, Jet):
        out = Jet.constant(out, n)
    return out


def third_order_step(x: float) -> float:
    return EPS**0.25 * (1.0 + abs(x))


def eval_jet(expr: Expr, coords: Sequence[str], point: Sequence[float], order: int = 2) -> Jet:
    """Jet of ``expr`` at ``point``.

    Order-2 parts are exact; for ``order=3`` the third derivatives come from
    central differences of order-2 Hessians, then full symmetrization.
    """
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    p = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(p)):
        raise DomainError("non-finite point")
    base = _jet2(expr, coords, p)
    if order == 2:
        return base
    n = len(coords)
    raw = np.empty((n, n, n))
    for k in range(n):
        h = third_order_step(p[k])
        xp, xm = p.copy(), p.copy()
        xp[k] += h
        xm[k] -= h
        raw[:, :, k] = (_jet2(expr, coords, xp).hess - _jet2(expr, coords, xm).hess) / (2 * h)
    third = (
        raw
        + raw.transpose(0, 2, 1)
        + raw.transpose(1, 0, 2)
        + raw.transpose(1, 2, 0)
        + raw.transpose(2, 0, 1)
        + raw.transpose(2, 1, 0)
    ) / 6.0
    return Jet(base.val, base.grad, base.hess, third)


def fd_jet(value: Callable[[np.ndarray], float], point: Sequence[float]) -> Jet:
    """Finite-difference jet: gradient with step cbrt(eps), Hessian with eps**(1/4)."""
    p = np.asarray(point, dtype=float)
    n = p.size
    f0 = value(p)
    grad = np.empty(n)
    hess = np.empty((n, n))
    hg = np.cbrt(EPS) * (1.0 + np.abs(p))
    hh = EPS**0.25 * (1.0 + np.abs(p))
    for i in range(n):
        e = np.zeros(n)
        e[i] = hg[i]
        grad[i] = (value(p + e) - value(p - e)) / (2 * hg[i])
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = hh[i]
        hess[i, i] = (value(p + ei) - 2 * f0 + value(p - ei)) / hh[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = hh[j]
            v = (value(p + ei + ej) - value(p + ei - ej) - value(p - ei + ej) + value(p - ei - ej)) / (
                4 * hh[i] * hh[j]
            )
            hess[i, j] = hess[j, i] = v
    return Jet(f0, grad, hess)


# --------------------------------------------------------------------------- fields


class ScalarField:
    """An expression bound to an ordered list of coordinate names."""

    __slots__ = ("expr", "coords")

    def __init__(self, expr: Expr, coords: Sequence[str]):
        coords = tuple(coords)
        missing = expr.names() - set(coords)
        if missing:
            raise UnknownIdentifierError(f"undeclared coordinates {sorted(missing)}", to_source(expr), 0)
        self.expr = expr
        self.coords = coords

    @classmethod
    def parse(cls, source, coords, params=None, functions=None):
        return cls(parse(source, coords, params, functions), coords)

    @classmethod
    def constant(cls, value, coords):
        return cls(Const(float(value)), coords)

    @property
    def source(self) -> str:
        return to_source(self.expr)

    @property
    def is_zero(self) -> bool:
        return isinstance(self.expr, Const) and self.expr.value == 0.0

    def depends_on(self) -> set[str]:
        return self.expr.names()

    def functions(self):
        return self.expr.functions()

    def on(self, coords: Sequence[str]) -> "ScalarField":
        """Same expression, re-bound to a (super)set of coordinates."""
        return ScalarField(self.expr, coords)

    def value(self, point) -> float:
        return evaluate(self.expr, self.coords, point)

    __call__ = value

    def jet(self, point, order: int = 2) -> Jet:
        return eval_jet(self.expr, self.coords, point, order)

    def fd_jet(self, point) -> Jet:
        return fd_jet(self.value, point)

    def __repr__(self):
        return f"ScalarField({self.source!r}, coords={list(self.coords)})"


def as_field(obj, coords, params=None, functions=None) -> ScalarField:
    if isinstance(obj, ScalarField):
        return obj.on(coords) if obj.coords != tuple(coords) else obj
    if isinstance(obj, Expr):
        return ScalarField(obj, coords)
    if isinstance(obj, (int, float)):
        return ScalarField.constant(obj, coords)
    return ScalarField.parse(obj, coords, params, functions)


# algebra helpers used by chart assembly; they build trees without folding


def mul(a: Expr, b: Expr) -> Expr:
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    return BinOp("/", a, b)


def square(a: Expr) -> Expr:
    return Pow(a, Fraction(2))
