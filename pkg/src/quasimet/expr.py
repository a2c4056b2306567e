"""A small expression language for field definitions.

Grammar (``^`` and ``**`` both mean power, right associative)::

    list    := expr (',' expr)*
    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('+' | '-') unary | power
    power   := atom (('^' | '**') unary)?
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Expressions evaluate with numpy, so variables may be bound to arrays, and
can be differentiated symbolically with :meth:`Expr.diff`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InputError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


class ExpressionError(InputError):
    pass


class Expr:
    """Base node. Subclasses implement ``evaluate``, ``diff`` and ``__str__``."""

    def __call__(self, **env):
        return self.evaluate(env)

    def evaluate(self, env):
        raise NotImplementedError

    def diff(self, var: str) -> "Expr":
        raise NotImplementedError

    def variables(self) -> set:
        return set()


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def diff(self, var):
        return ZERO

    def __str__(self):
        return repr(self.value) if self.value >= 0 else f"({self.value!r})"


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise ExpressionError(f"unbound variable {self.name!r}") from None

    def diff(self, var):
        return ONE if var == self.name else ZERO

    def variables(self):
        return {self.name}

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def diff(self, var):
        return neg(self.arg.diff(var))

    def variables(self):
        return self.arg.variables()

    def __str__(self):
        return f"-({self.arg})"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)

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
            return div(sub(mul(da, b), mul(a, db)), mul(b, b))
        # power
        if isinstance(b, Num):
            return mul(mul(Num(b.value), power(a, Num(b.value - 1))), da)
        # d(a^b) = a^b * (db*log(a) + b*da/a)
        return mul(self, add(mul(db, Call("log", a)), div(mul(b, da), a)))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr

    def evaluate(self, env):
        return FUNCTIONS[self.fn](self.arg.evaluate(env))

    def diff(self, var):
        u = self.arg
        du = u.diff(var)
        if isinstance(du, Num) and du.value == 0:
            return ZERO
        if self.fn == "sin":
            outer = Call("cos", u)
        elif self.fn == "cos":
            outer = neg(Call("sin", u))
        elif self.fn == "tan":
            outer = add(ONE, mul(self, self))
        elif self.fn == "exp":
            outer = self
        elif self.fn == "log":
            outer = div(ONE, u)
        else:  # sqrt
            outer = div(Num(0.5), self)
        return mul(outer, du)

    def variables(self):
        return self.arg.variables()

    def __str__(self):
        return f"{self.fn}({self.arg})"


ZERO = Num(0.0)
ONE = Num(1.0)


def _is(node, value):
    return isinstance(node, Num) and node.value == value


# Constructors with light constant folding; keeps derivatives readable.
def add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return BinOp("-", a, b)


def mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return BinOp("*", a, b)


def div(a, b):
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    return BinOp("/", a, b)


def power(a, b):
    if _is(b, 1):
        return a
    if _is(b, 0):
        return ONE
    return BinOp("^", a, b)


def neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.variables = frozenset(variables)
        self.tokens = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text):
        tokens = []
        i = 0
        stripped = text.rstrip()
        while i < len(stripped):
            m = _TOKEN.match(stripped, i)
            if not m or m.end() == i:
                raise ExpressionError(f"unexpected character at {i}: {stripped[i:i + 10]!r}")
            kind = m.lastgroup
            tokens.append((kind, m.group(kind), m.start(kind)))
            i = m.end()
        tokens.append(("end", "", len(stripped)))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, text, at = self.take()
        if text != value:
            raise ExpressionError(f"expected {value!r} at {at}, found {text or 'end of input'!r}")

    def parse_list(self):
        items = [self.parse_expr()]
        while self.peek()[1] == ",":
            self.take()
            items.append(self.parse_expr())
        kind, text, at = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected {text!r} at {at}")
        return items

    def parse_expr(self):
        node = self.parse_term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = BinOp(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = BinOp(op, node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.peek()[1] == "-":
            self.take()
            return neg(self.parse_unary())
        if self.peek()[1] == "+":
            self.take()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            return BinOp("^", base, self.parse_unary())
        return base

    def parse_atom(self):
        kind, text, at = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {text!r} at {at}")
                self.take()
                arg = self.parse_expr()
                self.expect(")")
                return Call(text, arg)
            if text in self.variables:
                return Var(text)
            if text in CONSTANTS:
                return Num(CONSTANTS[text])
            raise ExpressionError(f"unknown name {text!r} at {at}")
        if text == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        raise ExpressionError(f"unexpected {text or 'end of input'!r} at {at}")


def parse(text: str, variables=("x", "y")) -> Expr:
    """Parse a single expression over the given variable names."""
    items = parse_list(text, variables)
    if len(items) != 1:
        raise ExpressionError(f"expected one expression, got {len(items)}")
    return items[0]


def parse_list(text: str, variables=("x", "y")) -> list:
    """Parse comma-separated expressions, e.g. ``"x + 0.1, y"``."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("empty expression")
    return _Parser(text, variables).parse_list()


def as_expr(value, variables=("x", "y")) -> Expr:
    """Accept a number, an expression string or a parsed node."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise ExpressionError("boolean is not an expression")
    if isinstance(value, (int, float)):
        return Num(float(value))
    return parse(value, variables)
