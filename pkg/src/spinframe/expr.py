"""Scalar coefficient expressions in the coordinates x0..x3.

Grammar, loosest binding first::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' ['-'] INT)*
    atom  := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

so ``-x1^2`` is ``-(x1^2)``.  Evaluation is generic over the number type:
floats, :class:`~spinframe.dual.Dual4` and :class:`~spinframe.dual.Jet2` all
flow through the same tree walk.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

from .dual import DomainError, Dual4, Jet2

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "NonIntegerExponentError",
    "DomainError",
    "parse",
    "to_source",
    "evaluate",
    "eval_dual",
    "eval_jet",
    "FUNCTIONS",
    "VARIABLES",
]

VARIABLES = ("x0", "x1", "x2", "x3")
FUNCTIONS = ("sqrt", "sin", "cos", "exp", "tanh")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier '{name}'", offset)
        self.name = name


class NonIntegerExponentError(ExprSyntaxError):
    def __init__(self, offset: int):
        super().__init__("exponent must be an integer literal", offset)


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


# --- tokenizer -------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(src: str):
    pos = 0
    tokens = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        kind, val, pos = self.tok
        if val != text or kind == "end":
            raise ExprSyntaxError(f"expected {text!r}", pos)
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok == ("op", "-", self.tok[2]):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        while self.tok[1] == "^":
            self.advance()
            kind, val, pos = self.tok
            sign = 1
            if val == "-" and kind == "op":
                sign = -1
                self.advance()
                kind, val, pos = self.tok
            if kind != "num" or not val.isdigit():
                raise NonIntegerExponentError(pos)
            self.advance()
            node = Pow(node, sign * int(val))
        return node

    def atom(self) -> Expr:
        kind, val, pos = self.tok
        if kind == "num":
            self.advance()
            return Num(float(val))
        if kind == "name":
            self.advance()
            if val in VARIABLES:
                return Var(VARIABLES.index(val))
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise UnknownIdentifierError(val, pos)
        if val == "(" and kind == "op":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos)


def parse(src: str) -> Expr:
    """Parse an expression string; raises an :class:`ExprError` subclass."""
    if not isinstance(src, str) or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(src).parse()


# --- printer ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _fmt_num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_source(node: Expr) -> str:
    """Canonical text with the minimum parentheses needed to re-parse."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return VARIABLES[node.index]
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        return "-" + (f"({inner})" if _prec(node.operand) < 3 else inner)
    if isinstance(node, Pow):
        base = to_source(node.base)
        if _prec(node.base) < 4:
            base = f"({base})"
        return f"{base}^{node.exponent}"
    p = _PREC[node.op]
    left = to_source(node.left)
    right = to_source(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}" if p == 1 else f"{left}*{right}" if node.op == "*" else f"{left}/{right}"


# --- evaluation ------------------------------------------------------------

_MATH = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "exp": math.exp, "tanh": math.tanh}


def _apply(func: str, v, node: Call):
    if isinstance(v, (Dual4, Jet2)):
        try:
            return getattr(v, func)()
        except DomainError as exc:
            raise DomainError(str(exc), to_source(node)) from None
        except OverflowError:
            raise DomainError("overflow", to_source(node)) from None
    if func == "sqrt" and v < 0.0:
        raise DomainError("sqrt of negative value", to_source(node))
    try:
        return _MATH[func](v)
    except OverflowError:
        raise DomainError("overflow", to_source(node)) from None


def _walk(node: Expr, x: Sequence):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x[node.index]
    if isinstance(node, BinOp):
        a = _walk(node.left, x)
        b = _walk(node.right, x)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        bval = b.value if isinstance(b, (Dual4, Jet2)) else b
        if bval == 0.0:
            raise DomainError("division by zero", to_source(node))
        return a / b
    if isinstance(node, Neg):
        return -_walk(node.operand, x)
    if isinstance(node, Pow):
        base = _walk(node.base, x)
        bval = base.value if isinstance(base, (Dual4, Jet2)) else base
        if node.exponent < 0 and bval == 0.0:
            raise DomainError("division by zero", to_source(node))
        try:
            return base ** node.exponent
        except OverflowError:
            raise DomainError("overflow", to_source(node)) from None
    if isinstance(node, Call):
        return _apply(node.func, _walk(node.arg, x), node)
    raise TypeError(f"not an expression node: {node!r}")


def _as_expr(e) -> Expr:
    return parse(e) if isinstance(e, str) else e


def _point(x) -> Tuple[float, ...]:
    x = tuple(float(v) for v in x)
    if len(x) != 4:
        raise ValueError("points have exactly four coordinates")
    return x


def evaluate(e, x) -> float:
    """Float value of ``e`` at the point ``x``."""
    return float(_walk(_as_expr(e), _point(x)))


def eval_dual(e, x) -> Dual4:
    """Value and exact gradient of ``e`` at ``x``."""
    x = _point(x)
    out = _walk(_as_expr(e), [Dual4.variable(v, i) for i, v in enumerate(x)])
    return out if isinstance(out, Dual4) else Dual4(out)


def eval_jet(e, x) -> Jet2:
    """Value, gradient and Hessian of ``e`` at ``x``."""
    x = _point(x)
    out = _walk(_as_expr(e), [Jet2.variable(v, i) for i, v in enumerate(x)])
    return out if isinstance(out, Jet2) else Jet2(out)
