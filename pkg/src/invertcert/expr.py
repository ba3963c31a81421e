"""A small expression language for piecewise mappings R^n -> R^m.

Grammar (see docs/grammar.md for the full EBNF)::

    mapping    := expr | "[" expr ("," expr)* "]"
    expr       := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := "-" unary | power
    power      := atom ("^" unary)?
    atom       := NUMBER | VAR | "(" expr ")" | call
    call       := NAME "(" args ")"
    condition  := expr ("<=" | ">=" | "<" | ">" | "==") expr

Variables are ``x1 .. xn``. ``piecewise(condition, then, else)`` is the only
construct taking a condition. Evaluation is vectorized over a batch of points.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.column = col


class ExprDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Node", ...]


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Piecewise:
    cond: Compare
    then: "Node"
    other: "Node"


@dataclass(frozen=True)
class Vector:
    items: tuple["Node", ...]


Node = Union[Num, Var, Neg, BinOp, Call, Piecewise]

FUNCTIONS = {"abs": 1, "sqrt": 1, "sgn": 1, "sin": 1, "cos": 1, "min": 2, "max": 2}
COMPARISONS = ("<=", ">=", "==", "<", ">")

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<cmp><=|>=|==|<|>)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),\[\]])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg: str, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(msg, self.text, tok[2])

    def expect(self, value: str) -> None:
        tok = self.advance()
        if tok[1] != value:
            found = tok[1] or "end of input"
            raise self.error(f"expected {value!r}, found {found!r}", tok)

    def mapping(self) -> Union[Node, Vector]:
        if self.peek()[1] == "[":
            self.advance()
            items = [self.expr()]
            while self.peek()[1] == ",":
                self.advance()
                items.append(self.expr())
            self.expect("]")
            node: Union[Node, Vector] = Vector(tuple(items))
        else:
            node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, value, pos = tok = self.advance()
        if kind == "num":
            return Num(float(value))
        if value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            m = re.fullmatch(r"x(\d+)", value)
            if m:
                idx = int(m.group(1))
                if idx < 1:
                    raise self.error("variables are numbered from x1", tok)
                return Var(idx)
            if value == "piecewise":
                self.expect("(")
                cond = self.condition()
                self.expect(",")
                then = self.expr()
                self.expect(",")
                other = self.expr()
                self.expect(")")
                return Piecewise(cond, then, other)
            if value in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[value]:
                    raise self.error(
                        f"{value} takes {FUNCTIONS[value]} argument(s), got {len(args)}", tok
                    )
                return Call(value, tuple(args))
            raise self.error(f"unknown name {value!r}", tok)
        if value == "[":
            raise self.error("vectors are only allowed at the top level", tok)
        raise self.error(f"unexpected {value or 'end of input'!r}", tok)

    def condition(self) -> Compare:
        left = self.expr()
        tok = self.advance()
        if tok[1] not in COMPARISONS:
            raise self.error("expected a comparison operator", tok)
        return Compare(tok[1], left, self.expr())


def parse(text: str) -> Union[Node, Vector]:
    return _Parser(text).mapping()


def to_text(node) -> str:
    """Fully parenthesized source; parse(to_text(ast)) == ast."""
    if isinstance(node, Vector):
        return "[" + ", ".join(to_text(i) for i in node.items) + "]"
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}(" + ", ".join(to_text(a) for a in node.args) + ")"
    if isinstance(node, Compare):
        return f"{to_text(node.left)} {node.op} {to_text(node.right)}"
    if isinstance(node, Piecewise):
        return f"piecewise({to_text(node.cond)}, {to_text(node.then)}, {to_text(node.other)})"
    raise TypeError(f"not an expression node: {node!r}")


def max_var(node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Num):
        return 0
    if isinstance(node, Vector):
        return max(max_var(i) for i in node.items)
    if isinstance(node, Neg):
        return max_var(node.arg)
    if isinstance(node, (BinOp, Compare)):
        return max(max_var(node.left), max_var(node.right))
    if isinstance(node, Call):
        return max(max_var(a) for a in node.args)
    if isinstance(node, Piecewise):
        return max(max_var(node.cond), max_var(node.then), max_var(node.other))
    raise TypeError(node)


_CMP = {
    "<=": np.less_equal,
    ">=": np.greater_equal,
    "<": np.less,
    ">": np.greater,
    "==": np.equal,
}

_CALL = {
    "abs": np.abs,
    "sqrt": np.sqrt,
    "sgn": np.sign,  # sgn(0) = 0
    "sin": np.sin,
    "cos": np.cos,
    "min": np.minimum,
    "max": np.maximum,
}


def evaluate(node, X: np.ndarray) -> np.ndarray:
    """Evaluate on a batch ``X`` of shape (N, n); scalar nodes give shape (N,)."""
    if isinstance(node, Vector):
        return np.stack([evaluate(i, X) for i in node.items], axis=-1)
    if isinstance(node, Num):
        return np.full(X.shape[0], node.value)
    if isinstance(node, Var):
        return X[:, node.index - 1]
    if isinstance(node, Neg):
        return -evaluate(node.arg, X)
    if isinstance(node, BinOp):
        a, b = evaluate(node.left, X), evaluate(node.right, X)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return np.power(a, b)
    if isinstance(node, Call):
        return _CALL[node.name](*(evaluate(a, X) for a in node.args))
    if isinstance(node, Compare):
        return _CMP[node.op](evaluate(node.left, X), evaluate(node.right, X))
    if isinstance(node, Piecewise):
        # both branches are evaluated; values off the taken branch are discarded
        return np.where(evaluate(node.cond, X), evaluate(node.then, X), evaluate(node.other, X))
    raise TypeError(node)
