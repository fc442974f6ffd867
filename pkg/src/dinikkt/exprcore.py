"""Scalar expression language over variables ``x1..xn``.

Grammar (``^`` binds tighter than unary minus, and is right associative)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | IDENT | IDENT '(' expr (',' expr)? ')' | '(' expr ')'

Evaluation is vectorized over a batch of points with numpy; a single point
is a batch of one.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ExpressionSyntaxError, UnknownIdentifier

__all__ = [
    "Num", "Var", "Const", "Neg", "BinOp", "Call", "Expr",
    "parse", "to_text", "evaluate", "evaluate_many", "grad_fd",
    "max_var_index", "is_smooth", "as_point",
]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "abs": 1, "exp": 1, "log": 1, "sqrt": 1, "sin": 1, "cos": 1,
    "min": 2, "max": 2,
}
NONSMOOTH = frozenset({"abs", "min", "max"})

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)
_VAR_RE = re.compile(r"x([1-9][0-9]*)")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    # byte offsets differ from str indices only for non-ASCII input
    byte_at = lambda i: len(text[:i].encode("utf-8"))  # noqa: E731
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastgroup is None:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(byte_at(start), "a valid token", text)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), byte_at(m.start(kind))))
        pos = m.end()
    tokens.append(("end", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ExpressionSyntaxError(offset, repr(op), self.text)
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, _, offset = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(offset, "operator or end of input", self.text)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, value, offset = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "ident":
            self.advance()
            if value in FUNCTIONS:
                return self.call(value, offset)
            if value in CONSTANTS:
                return Const(value)
            m = _VAR_RE.fullmatch(value)
            if m:
                return Var(int(m.group(1)))
            raise UnknownIdentifier(value, offset)
        if (kind, value) == ("op", "("):
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(offset, "number, identifier, '-' or '('", self.text)

    def call(self, name: str, offset: int) -> Expr:
        self.expect_op("(")
        args = [self.expr()]
        if self.peek()[:2] == ("op", ","):
            self.advance()
            args.append(self.expr())
        arity = FUNCTIONS[name]
        kind, value, off = self.peek()
        if len(args) != arity:
            raise ExpressionSyntaxError(off, f"{name} takes {arity} argument(s)", self.text)
        self.expect_op(")")
        return Call(name, tuple(args))


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises
    ------
    ExpressionSyntaxError
        With the byte offset of the first bad token.
    UnknownIdentifier
        For names outside ``x1..xn``, the constants and the function set.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text).parse()


def to_text(e: Expr) -> str:
    """Canonical, fully parenthesized form; re-parses to the same tree."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_text(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")


def max_var_index(e: Expr) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Neg):
        return max_var_index(e.arg)
    if isinstance(e, BinOp):
        return max(max_var_index(e.left), max_var_index(e.right))
    if isinstance(e, Call):
        return max(max_var_index(a) for a in e.args)
    return 0


def is_smooth(e: Expr) -> bool:
    """True when no abs/min/max node occurs (a syntactic test only)."""
    if isinstance(e, Call):
        return e.name not in NONSMOOTH and all(is_smooth(a) for a in e.args)
    if isinstance(e, Neg):
        return is_smooth(e.arg)
    if isinstance(e, BinOp):
        return is_smooth(e.left) and is_smooth(e.right)
    return True


def as_point(p, n: int | None = None) -> np.ndarray:
    x = np.atleast_1d(np.asarray(p, dtype=float))
    if x.ndim != 1:
        raise ValueError("a point must be a 1-D vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("point coordinates must be finite")
    if n is not None and x.size != n:
        raise ValueError(f"point has dimension {x.size}, expected {n}")
    return x


def _check(strict: bool, bad: np.ndarray, what: str):
    if strict and np.any(bad):
        raise DomainError(what)


def _ev(e: Expr, X: np.ndarray, strict: bool) -> np.ndarray:
    if isinstance(e, Num):
        return np.full(X.shape[0], e.value)
    if isinstance(e, Var):
        return X[:, e.index - 1]
    if isinstance(e, Const):
        return np.full(X.shape[0], CONSTANTS[e.name])
    if isinstance(e, Neg):
        return -_ev(e.arg, X, strict)
    if isinstance(e, BinOp):
        a = _ev(e.left, X, strict)
        b = _ev(e.right, X, strict)
        if e.op == "+":
            r = a + b
        elif e.op == "-":
            r = a - b
        elif e.op == "*":
            r = a * b
        elif e.op == "/":
            _check(strict, b == 0.0, "division by zero")
            r = a / b
        else:
            _check(strict, (a == 0.0) & (b < 0.0), "0 raised to a negative power")
            r = np.power(a, b)
            _check(strict, np.isnan(r) & ~np.isnan(a) & ~np.isnan(b),
                   "negative base with non-integer exponent")
    else:
        name = e.name
        a = _ev(e.args[0], X, strict)
        if name == "abs":
            r = np.abs(a)
        elif name == "min":
            r = np.minimum(a, _ev(e.args[1], X, strict))
        elif name == "max":
            r = np.maximum(a, _ev(e.args[1], X, strict))
        elif name == "exp":
            r = np.exp(a)
        elif name == "log":
            _check(strict, a <= 0.0, "log of a nonpositive number")
            r = np.log(a)
        elif name == "sqrt":
            _check(strict, a < 0.0, "sqrt of a negative number")
            r = np.sqrt(a)
        elif name == "sin":
            r = np.sin(a)
        elif name == "cos":
            r = np.cos(a)
        else:  # pragma: no cover - parser rejects unknown names
            raise UnknownIdentifier(name, -1)
    finite = np.isfinite(r)
    if strict:
        _check(True, ~finite, "non-finite intermediate value")
        return r
    # lenient mode: out-of-domain entries become NaN and stay NaN
    return np.where(finite, r, np.nan)


def evaluate_many(e: Expr, X, strict: bool = True) -> np.ndarray:
    """Evaluate ``e`` at every row of ``X`` (shape ``(N, n)``).

    With ``strict=False`` points outside the domain yield NaN instead of
    raising :class:`DomainError`.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    need = max_var_index(e)
    if X.shape[1] < need:
        raise ValueError(f"expression uses x{need} but points have dimension {X.shape[1]}")
    with np.errstate(all="ignore"):
        out = _ev(e, X, strict)
    return np.array(out, dtype=float, copy=True)


def evaluate(e: Expr, p) -> float:
    """Value of ``e`` at a single point ``p``."""
    return float(evaluate_many(e, as_point(p)[None, :])[0])


def grad_fd(e: Expr, p, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of ``e`` at ``p``."""
    x = as_point(p)
    n = x.size
    stencil = np.repeat(x[None, :], 2 * n, axis=0)
    idx = np.arange(n)
    stencil[2 * idx, idx] += step
    stencil[2 * idx + 1, idx] -= step
    vals = evaluate_many(e, stencil)
    return (vals[0::2] - vals[1::2]) / (2.0 * step)
