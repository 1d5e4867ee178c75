"""Scalar-field expression language.

Grammar (whitespace is insignificant, there is no implicit multiplication)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' exponent)*          # left-associative
    exponent := '-' exponent | atom
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x1^2`` is ``-(x1^2)``.  Names are
chart coordinates ``x1..xm``, target coordinates ``y1..yn``, declared
constants, declared free parameters, or ``pi``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .jet import (
    UNARY_FUNCTIONS,
    DomainError,
    Jet,
    JetConfig,
    JetError,
    JetSpace,
    _series_recip,
    _UNARY_SERIES,
    _series_pow,
    jet_space,
)


class ExprError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifier(ExprError):
    pass


class ArityError(ExprError):
    pass


BUILTIN_CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class FieldEnv:
    """Names an expression may refer to.

    ``coordinate_prefix`` selects which coordinate family (``x`` on the source
    chart, ``y`` on the target chart) is in scope.  Parameters become extra jet
    variables placed after the coordinates.
    """

    dimension: int
    target_dimension: int = 0
    constants: Mapping[str, float] = field(default_factory=dict)
    parameters: tuple[str, ...] = ()
    coordinate_prefix: str = "x"

    def for_target(self) -> "FieldEnv":
        return FieldEnv(
            dimension=self.target_dimension,
            target_dimension=0,
            constants=self.constants,
            parameters=(),
            coordinate_prefix="y",
        )

    @property
    def coordinate_count(self) -> int:
        return self.dimension


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    """A named leaf.  ``slot`` is the jet variable index, or ``None`` for a
    named constant whose value is baked into ``value``."""

    name: str
    slot: int | None = None
    value: float = 0.0
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    arg: "Node"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"
    pos: int = field(default=0, compare=False)


Node = Const | Var | Unary | Binary


# -- tokenizer and parser ---------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, env: FieldEnv):
        self.text = text
        self.env = env
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.term(), pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.unary(), pos)
        return node

    def unary(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Unary("neg", self.unary(), pos)
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        while self.peek()[1] == "^" and self.peek()[0] == "op":
            _, _, pos = self.take()
            node = Binary("^", node, self.exponent(), pos)
        return node

    def exponent(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Unary("neg", self.exponent(), pos)
        return self.atom()

    def atom(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val), pos)
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(val, pos)
            return self.resolve(val, pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", pos)

    def call(self, name: str, pos: int) -> Node:
        if name not in UNARY_FUNCTIONS:
            raise UnknownIdentifier(f"unknown function {name!r}", pos)
        self.take()  # '('
        if self.peek()[1] == ")":
            raise ArityError(f"{name} expects 1 argument, got 0", pos)
        arg = self.expr()
        if self.peek()[1] == ",":
            raise ArityError(f"{name} expects 1 argument", pos)
        self.expect(")")
        return Unary(name, arg, pos)

    def resolve(self, name: str, pos: int) -> Node:
        env = self.env
        if name in UNARY_FUNCTIONS:
            raise ArityError(f"function {name!r} used without an argument", pos)
        m = re.fullmatch(r"([xy])([1-9]\d*)", name)
        if m and m.group(1) == env.coordinate_prefix:
            k = int(m.group(2))
            if k > env.dimension:
                raise UnknownIdentifier(f"coordinate {name} exceeds dimension {env.dimension}", pos)
            return Var(name, k - 1, 0.0, pos)
        if name in env.parameters:
            return Var(name, env.dimension + env.parameters.index(name), 0.0, pos)
        if name in env.constants:
            return Var(name, None, float(env.constants[name]), pos)
        if name in BUILTIN_CONSTANTS:
            return Var(name, None, BUILTIN_CONSTANTS[name], pos)
        raise UnknownIdentifier(f"unknown identifier {name!r}", pos)


def parse(text: str, env: FieldEnv) -> Node:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, env).parse()


def to_text(node: Node) -> str:
    """Fully parenthesised rendering that reparses to the same tree."""
    if isinstance(node, Const):
        return repr(node.value) if node.value >= 0 else f"(-{repr(-node.value)})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{to_text(node.arg)})"
        return f"{node.op}({to_text(node.arg)})"
    return f"({to_text(node.left)}{node.op}{to_text(node.right)})"


def free_slots(node: Node) -> frozenset[int]:
    if isinstance(node, Var):
        return frozenset() if node.slot is None else frozenset({node.slot})
    if isinstance(node, Const):
        return frozenset()
    if isinstance(node, Unary):
        return free_slots(node.arg)
    return free_slots(node.left) | free_slots(node.right)


def is_constant(node: Node) -> bool:
    return not free_slots(node)


# -- evaluation ---------------------------------------------------------------


def _attach(err: JetError, node) -> JetError:
    if getattr(err, "offset", None) is None:
        err.offset = node.pos
        err.args = (f"{err.args[0] if err.args else err} (expression offset {node.pos})",)
    return err


def eval_float(node: Node, point: Sequence[float]) -> float:
    space = jet_space(max(1, len(point)), 0)
    return float(eval_array(node, space, np.asarray(point, dtype=float), 0)[0])


def eval_array(node: Node, space: JetSpace, point: np.ndarray, order: int) -> np.ndarray:
    """Coefficient array of the expression's jet at ``point`` (length ``space.dimension``)."""
    return _eval(node, space, point, order)


def _eval(node, space: JetSpace, point, order) -> np.ndarray:
    if isinstance(node, Const):
        return space.constant(node.value, order)
    if isinstance(node, Var):
        if node.slot is None:
            return space.constant(node.value, order)
        return space.variable(node.slot, point[node.slot], order)
    try:
        if isinstance(node, Unary):
            a = _eval(node.arg, space, point, order)
            if node.op == "neg":
                return -a
            return space.compose_series(a, _UNARY_SERIES[node.op](a[0], order))
        a = _eval(node.left, space, point, order)
        if node.op == "^":
            return _power(node, a, space, point, order)
        b = _eval(node.right, space, point, order)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return space.mul(a, b)
        return space.mul(a, space.compose_series(b, _series_recip(b[0], order)))
    except JetError as err:
        raise _attach(err, node)


def _power(node: Binary, base, space, point, order):
    if is_constant(node.right):
        p = float(_eval(node.right, space, point, 0)[0])
        if p.is_integer() and abs(p) <= 64:
            return _int_pow(base, int(p), space, order)
        if not base[0] > 0.0:
            raise DomainError(f"non-integer power {p!r} of non-positive base {base[0]!r}")
        return space.compose_series(base, _series_pow(base[0], p, order))
    expo = _eval(node.right, space, point, order)
    if not base[0] > 0.0:
        raise DomainError(f"variable exponent on non-positive base {base[0]!r}")
    log_base = space.compose_series(base, _UNARY_SERIES["log"](base[0], order))
    prod = space.mul(expo, log_base)
    return space.compose_series(prod, _UNARY_SERIES["exp"](prod[0], order))


def _int_pow(base, p: int, space: JetSpace, order: int):
    if p < 0:
        pos = _int_pow(base, -p, space, order)
        return space.compose_series(pos, _series_recip(pos[0], order))
    result = space.constant(1.0, order)
    while p:
        if p & 1:
            result = space.mul(result, base)
        p >>= 1
        if p:
            base = space.mul(base, base)
    return result


def eval_jet(node: Node, point: Sequence[float], cfg: JetConfig) -> Jet:
    """Jet of the expression at ``point``, exact through ``cfg.order``."""
    point = tuple(float(x) for x in point)
    if len(point) != cfg.dimension:
        raise ValueError(f"point has {len(point)} coordinates, config expects {cfg.dimension}")
    needed = max(free_slots(node), default=-1)
    if needed >= cfg.dimension:
        raise ValueError(f"expression uses jet variable {needed}, config has {cfg.dimension}")
    space = jet_space(cfg.dimension, cfg.order)
    coeffs = eval_array(node, space, np.asarray(point), cfg.order)
    return Jet(point, cfg.order, coeffs)
