"""Arithmetic expressions over the chart variables ``x1..xn`` and ``v1..vn``.

Grammar, loosest to tightest binding::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' exponent)?          # right associative
    atom    := number | name | name '(' expr ')' | '(' expr ')'

``^`` only takes integer literal exponents (optionally signed or parenthesised),
so evaluation over jets never needs a fractional power of a negative base.
Write non-integer powers through ``exp``/``log``.

Evaluation is generic: the same tree evaluates on floats, numpy arrays (one
batch of points) or :class:`~pfinsler.jets.Jet` values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import jets
from .errors import DomainError, ExprSyntaxError, UnknownIdentifierError

FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos", "abs")
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)
_INT = re.compile(r"\d+$")


# -- AST ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


Node = Union[Const, Var, Neg, BinOp, Pow, Call]


def variable_names(dimension: int, kinds: str = "xv") -> list[str]:
    return [f"{k}{i}" for k in kinds for i in range(1, dimension + 1)]


# -- parser --------------------------------------------------------------------------


@dataclass
class _Tok:
    kind: str  # num | name | op | end
    text: str
    start: int  # 0-based offset
    end: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad + 1, text)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind), m.end()))
        pos = m.end()
    toks.append(_Tok("end", "", len(text), len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, allowed: set[str]):
        self.text = text
        self.allowed = allowed
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise ExprSyntaxError(message, tok.start + 1, self.text)

    def take(self, text: str | None = None) -> _Tok:
        tok = self.tok
        if text is not None and tok.text != text:
            what = "end of input" if tok.kind == "end" else repr(tok.text)
            self.error(f"expected {text!r}, found {what}")
        self.i += 1
        return tok

    def parse(self) -> Node:
        if self.tok.kind == "end":
            self.error("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected token {self.tok.text!r}")
        return node

    def expr(self) -> Node:
        left = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.take().text
            right = self.term()
            left = BinOp(op, left, right, (left.span[0], right.span[1]))
        return left

    def term(self) -> Node:
        left = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.take().text
            right = self.unary()
            left = BinOp(op, left, right, (left.span[0], right.span[1]))
        return left

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            start = self.take().start
            operand = self.unary()
            return Neg(operand, (start, operand.span[1]))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            k, end = self.exponent()
            return Pow(base, k, (base.span[0], end))
        return base

    def exponent(self) -> tuple[int, int]:
        sign = 1
        if self.tok.text == "-":
            self.take()
            sign = -1
        if self.tok.text == "(":
            self.take()
            k, _ = self.exponent()
            end = self.take(")").end
        else:
            tok = self.tok
            if tok.kind != "num":
                self.error("exponent must be an integer literal")
            if not _INT.match(tok.text):
                self.error(f"non-integer exponent {tok.text!r}")
            self.take()
            k, end = int(tok.text), tok.end
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            inner, end = self.exponent()
            k = k**inner if inner >= 0 else None
            if k is None:
                self.error("exponent must evaluate to an integer")
        return sign * k, end

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Const(float(tok.text), (tok.start, tok.end))
        if tok.kind == "name":
            self.take()
            if tok.text in FUNCTIONS:
                self.take("(")
                arg = self.expr()
                end = self.take(")").end
                return Call(tok.text, arg, (tok.start, end))
            if tok.text in CONSTANTS:
                return Const(CONSTANTS[tok.text], (tok.start, tok.end))
            if tok.text not in self.allowed:
                raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.start + 1, self.text)
            return Var(tok.text, (tok.start, tok.end))
        if tok.kind == "op" and tok.text == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected token {tok.text!r}")


def parse(text: str, dimension: int, kinds: str = "xv") -> Node:
    """Parse ``text`` into an AST; variables restricted to ``kinds`` ('x', 'v' or both)."""
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 1, text if isinstance(text, str) else "")
    return _Parser(text, set(variable_names(dimension, kinds))).parse()


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Pow):
        return free_variables(node.base)
    return free_variables(node.operand if isinstance(node, Neg) else node.arg)


def to_source(node: Node) -> str:
    """Fully parenthesised text that re-parses to a structurally equal tree."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Pow):
        k = node.exponent
        return f"({to_source(node.base)})^" + (str(k) if k >= 0 else f"(-{-k})")
    return f"{node.func}({to_source(node.arg)})"


# -- evaluation ----------------------------------------------------------------------


_GENERIC = {
    "sqrt": jets.sqrt,
    "exp": jets.exp,
    "log": jets.log,
    "sin": jets.sin,
    "cos": jets.cos,
    "abs": jets.fabs,
}


def _div(a, b, where: str):
    if not isinstance(b, jets.Jet) and np.any(np.asarray(b) == 0):
        raise DomainError(f"division by zero in {where}")
    try:
        return a / b
    except DomainError as exc:
        raise DomainError(f"division by zero in {where}") from exc


def _call(func: str, a, where: str):
    return _GENERIC[func](a, where)


@dataclass
class EvalScope:
    """Bindings of ``x1..xn`` and ``v1..vn`` to values of one numeric kind."""

    dimension: int
    bindings: dict

    @classmethod
    def from_vectors(cls, x, v=None) -> "EvalScope":
        n = len(x)
        b = {f"x{i + 1}": x[i] for i in range(n)}
        if v is not None:
            b.update({f"v{i + 1}": v[i] for i in range(n)})
        return cls(n, b)


def evaluate(node: Node, scope: EvalScope):
    """Tree-walking evaluation; the reference for :func:`compile_expr`."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return scope.bindings[node.name]
        except KeyError:
            raise DomainError(f"unbound variable {node.name}") from None
    if isinstance(node, Neg):
        return -evaluate(node.operand, scope)
    if isinstance(node, Pow):
        return jets.ipow(evaluate(node.base, scope), node.exponent)
    if isinstance(node, Call):
        return _call(node.func, evaluate(node.arg, scope), to_source(node))
    a = evaluate(node.left, scope)
    b = evaluate(node.right, scope)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return _div(a, b, to_source(node))


def _emit(node: Node, consts: list) -> str:
    if isinstance(node, Const):
        consts.append(node.value)
        return f"_c[{len(consts) - 1}]"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_emit(node.operand, consts)})"
    if isinstance(node, Pow):
        return f"_ipow({_emit(node.base, consts)}, {node.exponent})"
    if isinstance(node, Call):
        return f"_call({node.func!r}, {_emit(node.arg, consts)}, {to_source(node)!r})"
    if node.op == "/":
        return f"_div({_emit(node.left, consts)}, {_emit(node.right, consts)}, {to_source(node)!r})"
    return f"({_emit(node.left, consts)} {node.op} {_emit(node.right, consts)})"


def compile_expr(node: Node, dimension: int, kinds: str = "xv") -> Callable:
    """Compile to a Python function of the positional variables ``x1..xn[, v1..vn]``.

    Only trees produced by :func:`parse` are accepted, so the generated source is
    built from a closed vocabulary.
    """
    consts: list = []
    body = _emit(node, consts)
    args = ", ".join(variable_names(dimension, kinds))
    namespace = {"_c": consts, "_ipow": jets.ipow, "_call": _call, "_div": _div}
    exec(f"def _f({args}):\n    return {body}\n", namespace)  # noqa: S102
    return namespace["_f"]


class Expression:
    """Parsed and compiled expression text, callable on coordinate vectors."""

    def __init__(self, text: str, dimension: int, kinds: str = "xv"):
        self.text = text
        self.dimension = dimension
        self.kinds = kinds
        self.ast = parse(text, dimension, kinds)
        self._fn = compile_expr(self.ast, dimension, kinds)
        self.constant = not free_variables(self.ast)

    def __call__(self, x, v=None):
        args = list(x) if "x" in self.kinds else []
        if "v" in self.kinds:
            args += list(v)
        out = self._fn(*args)
        if self.constant and args and not isinstance(args[0], jets.Jet):
            # broadcast constants to the batch shape of the inputs
            return out + np.zeros(np.shape(args[0]))
        return out

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"
