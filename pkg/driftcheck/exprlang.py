# MIT License
#
# Copyright (c) 2026 driftcheck contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""
The scenario expression language.

Grammar (EBNF)::

    expression = term , { ( "+" | "-" ) , term } ;
    term       = unary , { ( "*" | "/" ) , unary } ;
    unary      = "-" , unary | power ;
    power      = primary , [ "^" , exponent ] ;
    exponent   = "-" , exponent | primary , [ "^" , exponent ] ;   (* constant *)
    primary    = number | variable | constant | call | "(" , expression , ")" ;
    call       = ( "sin" | "cos" | "exp" | "log" | "sqrt" ) , "(" , expression , ")" ;
    variable   = "x" , digit ;                                      (* x1 .. x<dim> *)
    constant   = "pi" | "e" ;
    number     = digits , [ "." , [ digits ] ] , [ ( "e" | "E" ) , [ "+" | "-" ] , digits ]
               | "." , digits , [ exponent part ] ;

``^`` binds tighter than unary minus and is right associative; its exponent must
not reference any variable and is folded to a number at parse time.
"""

from __future__ import annotations

import abc
import enum
import logging as __logging
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

import driftcheck.jet as jet
from driftcheck.jet import Jet

module_logger = __logging.getLogger(__name__)

MAX_DIM = 3
FUNCTIONS = tuple(jet.UNARY_FUNCTIONS)
CONSTANTS = {"pi": math.pi, "e": math.e}


class EEType(enum.IntEnum):
    EE_SYNTAX = 0
    EE_UNKNOWN_IDENTIFIER = 1
    EE_DIMENSION_MISMATCH = 2
    EE_DOMAIN = 3


class ExprException(Exception):
    def __init__(self, eetype: EEType, msg: str, offset: int | None = None, subexpr: str | None = None, *args):
        super().__init__(msg, args)
        self.type = eetype
        self.msg = msg
        self.offset = offset
        self.subexpr = subexpr

    def __str__(self):
        where = f" at offset {self.offset}" if self.offset is not None else ""
        return f"{self.msg}{where}"


# syntax tree

class Expr(abc.ABC):
    """Immutable expression node. ``str(node)`` prints a form that re-parses to an equal tree."""

    @abc.abstractmethod
    def _evaluate(self, env: Sequence[Jet]) -> Jet:
        raise NotImplementedError()

    @abc.abstractmethod
    def children(self) -> tuple[Expr, ...]:
        raise NotImplementedError()

    def evaluate(self, env: Sequence[Jet]) -> Jet:
        """Evaluate with ``env[i]`` bound to variable x<i+1>.

        ``env`` may hold jets of any dimension, so an ambient expression can be
        pulled back along a map by binding the jets of the map components.
        """
        if not env:
            raise ValueError("evaluation needs at least one bound variable jet to fix the jet shape")
        return self._evaluate(env)

    def variables(self) -> frozenset[int]:
        found = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, Variable):
                found.add(node.index)
            stack.extend(node.children())
        return frozenset(found)

    def depends_on(self, index: int) -> bool:
        return index in self.variables()

    def is_constant(self) -> bool:
        return not self.variables()


@dataclass(frozen=True)
class Number(Expr):
    value: float

    def _evaluate(self, env):
        return _constant_like(env, self.value)

    def children(self):
        return ()

    def __str__(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class NamedConstant(Expr):
    name: str

    def _evaluate(self, env):
        return _constant_like(env, CONSTANTS[self.name])

    def children(self):
        return ()

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Variable(Expr):
    index: int

    def _evaluate(self, env):
        if self.index >= len(env):
            raise ExprException(EEType.EE_DIMENSION_MISMATCH,
                                f"variable {self} is not bound ({len(env)} variables available)")
        return env[self.index]

    def children(self):
        return ()

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Negate(Expr):
    operand: Expr

    def _evaluate(self, env):
        return -self.operand._evaluate(env)

    def children(self):
        return (self.operand,)

    def __str__(self):
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinaryOp(Expr):
    op: str
    left: Expr
    right: Expr

    def _evaluate(self, env):
        a = self.left._evaluate(env)
        b = self.right._evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        try:
            return a / b
        except jet.DomainViolation as e:
            raise ExprException(EEType.EE_DOMAIN, f"{e.msg} in '{self}'", subexpr=str(self)) from e

    def children(self):
        return self.left, self.right

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: float

    def _evaluate(self, env):
        try:
            return jet.power(self.base._evaluate(env), self.exponent)
        except jet.DomainViolation as e:
            raise ExprException(EEType.EE_DOMAIN, f"{e.msg} in '{self}'", subexpr=str(self)) from e

    def children(self):
        return (self.base,)

    def __str__(self):
        return f"({self.base}^({float(self.exponent)!r}))"


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def _evaluate(self, env):
        try:
            return jet.UNARY_FUNCTIONS[self.func](self.arg._evaluate(env))
        except jet.DomainViolation as e:
            raise ExprException(EEType.EE_DOMAIN, f"{e.msg} in '{self}'", subexpr=str(self)) from e

    def children(self):
        return (self.arg,)

    def __str__(self):
        return f"{self.func}({self.arg})"


def _constant_like(env: Sequence[Jet], value: float) -> Jet:
    ref = env[0]
    return Jet.constant(np.full(ref.shape, value), ref.dim, ref.order)


# tokenizer

_TOKEN_RE = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprException(EEType.EE_SYNTAX, f"unexpected character {text[pos]!r}", offset=pos)
        kind = m.lastgroup
        if kind != "space":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        if token.kind != "end":
            self.pos += 1
        return token

    def check(self, *ops: str) -> bool:
        token = self.peek()
        return token.kind == "op" and token.text in ops

    def expect(self, op: str) -> _Token:
        token = self.peek()
        if not self.check(op):
            found = "end of input" if token.kind == "end" else repr(token.text)
            raise ExprException(EEType.EE_SYNTAX, f"expected {op!r}, found {found}", offset=token.offset)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expression()
        token = self.peek()
        if token.kind != "end":
            raise ExprException(EEType.EE_SYNTAX, f"unexpected {token.text!r}", offset=token.offset)
        return node

    def expression(self) -> Expr:
        node = self.term()
        while self.check("+", "-"):
            op = self.advance().text
            node = BinaryOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.check("*", "/"):
            op = self.advance().text
            node = BinaryOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.check("-"):
            self.advance()
            return Negate(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.check("^"):
            self.advance()
            start = self.peek().offset
            exponent = self.exponent()
            if not exponent.is_constant():
                raise ExprException(EEType.EE_SYNTAX, "exponent must be constant", offset=start)
            return Power(base, fold_constant(exponent))
        return base

    def exponent(self) -> Expr:
        if self.check("-"):
            self.advance()
            return Negate(self.exponent())
        return self.power()

    def primary(self) -> Expr:
        token = self.peek()
        if token.kind == "number":
            self.advance()
            return Number(float(token.text))
        if token.kind == "name":
            self.advance()
            return self.identifier(token)
        if self.check("("):
            self.advance()
            node = self.expression()
            self.expect(")")
            return node
        found = "end of input" if token.kind == "end" else repr(token.text)
        raise ExprException(EEType.EE_SYNTAX, f"expected an operand, found {found}", offset=token.offset)

    def identifier(self, token: _Token) -> Expr:
        name = token.text
        if name in FUNCTIONS:
            self.expect("(")
            arg = self.expression()
            self.expect(")")
            return Call(name, arg)
        if name in CONSTANTS:
            return NamedConstant(name)
        m = re.fullmatch(r"x([1-9])", name)
        if m:
            index = int(m.group(1)) - 1
            if index >= self.dim:
                raise ExprException(EEType.EE_DIMENSION_MISMATCH,
                                    f"variable {name} exceeds dimension {self.dim}", offset=token.offset)
            return Variable(index)
        raise ExprException(EEType.EE_UNKNOWN_IDENTIFIER, f"unknown identifier {name!r}", offset=token.offset)


def parse(text: str, dim: int) -> Expr:
    if not isinstance(text, str) or not text.strip():
        raise ExprException(EEType.EE_SYNTAX, "empty expression", offset=0)
    if dim < 0 or dim > MAX_DIM:
        raise ExprException(EEType.EE_DIMENSION_MISMATCH, f"dimension {dim} outside 0..{MAX_DIM}")
    return _Parser(text, dim).parse()


def fold_constant(expr: Expr) -> float:
    """Value of a variable-free expression."""
    if not expr.is_constant():
        raise ExprException(EEType.EE_SYNTAX, f"'{expr}' is not constant")
    return float(expr.evaluate([Jet.constant(0.0, 1, 0)]).value)


def parse_constant(text: str) -> float:
    return fold_constant(parse(text, 0))


@dataclass(frozen=True)
class Jet3:
    """Value and all partial derivatives through order three at one point."""
    dim: int
    value: float
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray


def taylor(expr: Expr, points, order: int) -> Jet:
    """Jet of ``expr`` of the given order around each of ``points`` (shape (..., dim))."""
    return expr.evaluate(Jet.variables(points, order))


def eval_jet(expr: Expr, point) -> Jet3:
    point = np.asarray(point, dtype=np.float64).reshape(-1)
    j = taylor(expr, point, 3)
    return Jet3(dim=point.size, value=float(j.value), grad=j.gradient(), hess=j.hessian(), third=j.third())


def values(expr: Expr, points) -> np.ndarray:
    """Value-only evaluation over an array of points of shape (..., dim)."""
    return taylor(expr, points, 0).value


def compose(expr: Expr, components: Sequence[Jet]) -> Jet:
    """Pull ``expr`` back along a map given by the jets of its components."""
    return expr.evaluate(components)


def reindex(expr: Expr, mapping: dict[int, int]) -> Expr:
    """Copy of ``expr`` with variable x<i+1> renamed to x<mapping[i]+1>."""
    if isinstance(expr, Variable):
        return Variable(mapping[expr.index])
    if isinstance(expr, Negate):
        return Negate(reindex(expr.operand, mapping))
    if isinstance(expr, BinaryOp):
        return BinaryOp(expr.op, reindex(expr.left, mapping), reindex(expr.right, mapping))
    if isinstance(expr, Power):
        return Power(reindex(expr.base, mapping), expr.exponent)
    if isinstance(expr, Call):
        return Call(expr.func, reindex(expr.arg, mapping))
    return expr
