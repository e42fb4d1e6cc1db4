"""Scalar field expressions over chart coordinates.

Grammar (loosest binding first)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``**`` is accepted as an alias of ``^``.  Coordinates become :class:`Var`
nodes addressed by index; everything else that is a bare name must be a
declared parameter (or the constant ``pi``).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "tanh")
CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return repr(self.value) if not float(self.value).is_integer() else str(int(self.value))


@dataclass(frozen=True)
class Var:
    index: int
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Param:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: "Expr"

    def __str__(self):
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"

    def __str__(self):
        return f"({self.base}^{self.exponent})"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"

    def __str__(self):
        return f"{self.func}({self.arg})"


Expr = Union[Num, Var, Param, Neg, BinOp, Pow, Call]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + 1
            while col <= len(text) and text[col - 1].isspace():
                col += 1
            raise ExprSyntaxError("unexpected character", col, text[col - 1])
        kind = m.lastgroup
        value = m.group(kind)
        tokens.append((kind, value, m.start(kind) + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text, coords, params):
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = {name: k for k, name in enumerate(coords)}
        self.params = set(params)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, col = self.take()
        if val != value or kind == "end":
            raise ExprSyntaxError(f"expected {value!r}", col, val or "<end>")

    def parse(self):
        node = self.expr()
        kind, val, col = self.peek()
        if kind != "end":
            raise ExprSyntaxError("unexpected token", col, val)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.take()
            return Pow(base, self.unary())
        return base

    def atom(self):
        kind, val, col = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if val not in FUNCTIONS:
                    raise UnknownIdentifier(f"unknown function {val!r} at column {col}")
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in self.coords:
                return Var(self.coords[val], val)
            if val in self.params:
                return Param(val)
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            raise UnknownIdentifier(f"unknown identifier {val!r} at column {col}")
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError("unexpected token", col, val or "<end>")


def parse_expr(text: str, coords: Sequence[str], params: Sequence[str] = ()) -> Expr:
    """Parse ``text`` into an immutable AST.

    >>> parse_expr("x0^2 + sin(x1)", ["x0", "x1"])
    BinOp(op='+', left=Pow(base=Var(index=0, name='x0'), exponent=Num(value=2.0)), right=Call(func='sin', arg=Var(index=1, name='x1')))
    """
    if not coords:
        raise ValueError("at least one coordinate name is required")
    clash = set(coords) & set(params)
    if clash:
        raise ValueError(f"names declared both as coordinate and parameter: {sorted(clash)}")
    if not isinstance(text, str):
        text = str(text)
    return _Parser(text, list(coords), list(params)).parse()


def constant_value(node: Expr):
    """Return the float value of a literal (possibly negated) or None."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        inner = constant_value(node.operand)
        return None if inner is None else -inner
    return None


def max_var_index(node: Expr) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, (Num, Param)):
        return -1
    if isinstance(node, Neg):
        return max_var_index(node.operand)
    if isinstance(node, Call):
        return max_var_index(node.arg)
    if isinstance(node, Pow):
        return max(max_var_index(node.base), max_var_index(node.exponent))
    return max(max_var_index(node.left), max_var_index(node.right))


def params_used(node: Expr) -> set:
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, (Num, Var)):
        return set()
    if isinstance(node, Neg):
        return params_used(node.operand)
    if isinstance(node, Call):
        return params_used(node.arg)
    if isinstance(node, Pow):
        return params_used(node.base) | params_used(node.exponent)
    return params_used(node.left) | params_used(node.right)


def eval_value(node: Expr, point: Sequence[float], params: Mapping[str, float] = None) -> float:
    """Plain floating-point evaluation, no derivatives.

    Kept separate from the jet evaluator so finite-difference checks do not
    share code with the path they check.
    """
    params = params or {}

    def ev(n):
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Var):
            return float(point[n.index])
        if isinstance(n, Param):
            return float(params[n.name])
        if isinstance(n, Neg):
            return -ev(n.operand)
        if isinstance(n, BinOp):
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            if b == 0.0:
                raise DomainError("division by zero", n)
            return a / b
        if isinstance(n, Pow):
            a, b = ev(n.base), ev(n.exponent)
            if float(b).is_integer():
                if a == 0.0 and b < 0:
                    raise DomainError("division by zero", n)
                return a ** int(b)
            if a <= 0.0:
                raise DomainError("non-integer power of non-positive base", n)
            return a ** b
        x = ev(n.arg)
        if n.func == "log":
            if x <= 0.0:
                raise DomainError("log of non-positive value", n)
            return math.log(x)
        if n.func == "sqrt":
            if x < 0.0:
                raise DomainError("sqrt of negative value", n)
            return math.sqrt(x)
        return getattr(math, n.func)(x)

    return float(ev(node))
