"""Integrand expressions in one variable ``x``.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := number | 'x' | 'pi' | 'e' | name '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)`` while
``2^-3`` is ``2^(-3)``. ``log`` is the natural logarithm. There is no
implicit multiplication: ``2x`` is a parse error.

Evaluation follows IEEE semantics: NaN and infinities propagate as values
(``log(-1)`` is NaN, ``1/0`` is inf, ``0^0`` is 1).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._backend import kernels

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}
MAX_DEPTH = 100


class ParseError(ValueError):
    """Malformed expression; ``offset`` indexes the offending character."""

    def __init__(self, message: str, offset: int, expected: str = ""):
        self.offset = offset
        self.expected = expected
        detail = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownFunction(ParseError):
    def __init__(self, name: str, offset: int):
        self.name = name
        super().__init__(f"unknown function {name!r}", offset,
                         "one of " + ", ".join(FUNCTIONS))


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str = "x"


@dataclass(frozen=True)
class Constant:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "ExprAst"

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise UnknownFunction(self.name, 0)


ExprAst = Union[Number, Variable, Constant, Unary, Binary, Call]

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


def tokenize(src: str) -> list[tuple[str, str, int]]:
    """Split ``src`` into ``(kind, text, offset)`` triples ending with an ``end`` token."""
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = tokenize(src)
        self.i = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str, what: str):
        kind, tok, off = self.peek()
        if tok != text or kind != "op":
            raise ParseError(f"unexpected {_describe(kind, tok)}", off, what)
        self.advance()

    def nest(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError("expression nested too deeply", self.peek()[2])

    def expr(self) -> ExprAst:
        self.nest()
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        self.depth -= 1
        return node

    def term(self) -> ExprAst:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> ExprAst:
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            self.nest()
            node = Unary("-", self.unary())
            self.depth -= 1
            return node
        return self.power()

    def power(self) -> ExprAst:
        base = self.primary()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            self.nest()
            exponent = self.unary()
            self.depth -= 1
            return Binary("^", base, exponent)
        return base

    def primary(self) -> ExprAst:
        kind, tok, off = self.advance()
        if kind == "num":
            return Number(float(tok))
        if kind == "name":
            if tok == "x":
                return Variable()
            if tok in CONSTANTS:
                return Constant(tok)
            if self.peek()[:2] != ("op", "("):
                if tok in FUNCTIONS:
                    raise ParseError(f"function {tok!r} needs an argument", self.peek()[2], "'('")
                raise ParseError(f"unknown identifier {tok!r}", off, "x, pi, e or a function call")
            if tok not in FUNCTIONS:
                raise UnknownFunction(tok, off)
            self.advance()
            arg = self.expr()
            self.expect(")", "')'")
            return Call(tok, arg)
        if (kind, tok) == ("op", "("):
            inner = self.expr()
            self.expect(")", "')'")
            return inner
        raise ParseError(f"unexpected {_describe(kind, tok)}", off,
                         "number, x, constant, function call or '('")


def _describe(kind: str, tok: str) -> str:
    return "end of input" if kind == "end" else repr(tok)


def parse(src: str | bytes) -> ExprAst:
    """Parse an integrand expression; raises :class:`ParseError` on any malformed input."""
    if isinstance(src, (bytes, bytearray)):
        try:
            src = bytes(src).decode("ascii")
        except UnicodeDecodeError as exc:
            raise ParseError("non-ASCII byte", exc.start) from None
    if not src.strip():
        raise ParseError("empty expression", len(src), "an expression")
    p = _Parser(src)
    node = p.expr()
    kind, tok, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {_describe(kind, tok)}", off, "operator or end of input")
    if height(node) > MAX_DEPTH:
        raise ParseError("expression nested too deeply", 0)
    return node


def height(ast: ExprAst) -> int:
    """Tree height, computed without recursion."""
    best = 0
    stack = [(ast, 1)]
    while stack:
        node, h = stack.pop()
        best = max(best, h)
        if isinstance(node, Unary):
            stack.append((node.operand, h + 1))
        elif isinstance(node, Binary):
            stack.extend(((node.left, h + 1), (node.right, h + 1)))
        elif isinstance(node, Call):
            stack.append((node.arg, h + 1))
    return best


_NP_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh, "abs": np.abs,
}
_NP_BINARY = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "^": np.power}


def _walk(node: ExprAst, x):
    if isinstance(node, Number):
        return np.float64(node.value)
    if isinstance(node, Variable):
        return x
    if isinstance(node, Constant):
        return np.float64(CONSTANTS[node.name])
    if isinstance(node, Unary):
        return np.negative(_walk(node.operand, x))
    if isinstance(node, Binary):
        return _NP_BINARY[node.op](_walk(node.left, x), _walk(node.right, x))
    return _NP_FUNCS[node.name](_walk(node.arg, x))


def evaluate(ast: ExprAst, x):
    """Tree-walking evaluation at a scalar or array ``x``."""
    with np.errstate(all="ignore"):
        out = _walk(ast, np.asarray(x, dtype=np.float64))
    if np.ndim(x) == 0:
        return float(out)
    return np.broadcast_to(out, np.shape(x)).astype(np.float64)


def to_source(ast: ExprAst) -> str:
    """Fully parenthesised source text that parses back to an equivalent tree."""
    if isinstance(ast, Number):
        text = repr(float(ast.value))
        if not math.isfinite(ast.value):
            raise ValueError(f"cannot print non-finite literal {ast.value}")
        return f"({text})" if text.startswith("-") else text
    if isinstance(ast, Variable):
        return "x"
    if isinstance(ast, Constant):
        return ast.name
    if isinstance(ast, Unary):
        return f"(-{to_source(ast.operand)})"
    if isinstance(ast, Binary):
        return f"({to_source(ast.left)} {ast.op} {to_source(ast.right)})"
    return f"{ast.name}({to_source(ast.arg)})"


@dataclass(frozen=True)
class Program:
    """Postfix form of an expression for the batch evaluator kernel."""

    code: np.ndarray
    consts: np.ndarray

    def __call__(self, xs) -> np.ndarray:
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        return np.asarray(kernels.run_program(self.code, self.consts, xs))


def compile_program(ast: ExprAst) -> Program:
    ops = kernels.OPCODES
    code: list[int] = []
    consts: list[float] = []

    def emit(node):
        if isinstance(node, (Number, Constant)):
            value = node.value if isinstance(node, Number) else CONSTANTS[node.name]
            code.extend((ops["const"], len(consts)))
            consts.append(value)
        elif isinstance(node, Variable):
            code.append(ops["x"])
        elif isinstance(node, Unary):
            emit(node.operand)
            code.append(ops["neg"])
        elif isinstance(node, Binary):
            emit(node.left)
            emit(node.right)
            code.append(ops[node.op])
        else:
            emit(node.arg)
            code.append(ops[node.name])

    emit(ast)
    return Program(np.array(code, dtype=np.intc), np.array(consts or [0.0], dtype=np.float64))
