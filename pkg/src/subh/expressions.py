"""Recursive-descent parser and evaluator for Hamiltonian expressions.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | base ('^' base)?
    base   := NUMBER | 't' | 'T' | 'pi' | 'r2' | 'x' INT
            | func '(' expr ')' | '(' expr ')' | 'theta_halfsine'
    func   := sin | cos | ln | exp | sqrt

``r2`` is the squared state norm, ``x1 .. x2N`` are state coordinates,
``theta_halfsine`` is the built-in T-periodic profile equal to
``sin(2*pi*t/T)`` on the first half period and 0 on the second.  Unary
minus is accepted anywhere a factor is (a strict grammar extension).

Evaluation is generic over the scalar type of the state coordinates, so the
same tree produces values (floats/arrays) and derivatives (duals).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import duals
from .errors import EvaluationError, ParseError

_FUNCS = ("sin", "cos", "ln", "exp", "sqrt")
_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


# -- AST nodes ---------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class TVar:
    pass


@dataclass(frozen=True)
class PeriodT:
    pass


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class R2:
    pass


@dataclass(frozen=True)
class Coord:
    index: int  # 1-based


@dataclass(frozen=True)
class Theta:
    pass


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Fn:
    name: str
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


# -- tokenizer / parser ------------------------------------------------------

@dataclass
class _Token:
    kind: str   # "num" | "name" | "op" | "end"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise ParseError(f"unexpected character {text[bad_at]!r}", bad_at)
        if m.group("num") is not None:
            tokens.append(_Token("num", m.group("num"), m.start("num")))
        elif m.group("name") is not None:
            tokens.append(_Token("name", m.group("name"), m.start("name")))
        else:
            tokens.append(_Token("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        if self.cur.kind == "op" and self.cur.text == op:
            self.advance()
            return
        raise ParseError(f"expected {op!r}", self.cur.pos)

    def parse(self):
        node = self.expr()
        if self.cur.kind != "end":
            raise ParseError(f"unexpected trailing input {self.cur.text!r}", self.cur.pos)
        return node

    def expr(self):
        node = self.term()
        while self.cur.kind == "op" and self.cur.text in "+-":
            op = self.advance().text
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.cur.kind == "op" and self.cur.text in "*/":
            op = self.advance().text
            node = Bin(op, node, self.factor())
        return node

    def factor(self):
        if self.cur.kind == "op" and self.cur.text == "-":
            self.advance()
            return Neg(self.factor())
        node = self.base()
        if self.cur.kind == "op" and self.cur.text == "^":
            self.advance()
            node = Bin("^", node, self.base())
        return node

    def base(self):
        tok = self.cur
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            name = tok.text
            if name in _FUNCS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Fn(name, arg)
            if name == "t":
                return TVar()
            if name == "T":
                return PeriodT()
            if name == "pi":
                return Pi()
            if name == "r2":
                return R2()
            if name == "theta_halfsine":
                return Theta()
            m = re.fullmatch(r"x(\d+)", name)
            if m:
                idx = int(m.group(1))
                if idx < 1:
                    raise ParseError(f"state index must be >= 1 in {name!r}", tok.pos)
                return Coord(idx)
            raise ParseError(f"unknown identifier {name!r}", tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if tok.kind == "end":
            raise ParseError("unexpected end of input", tok.pos)
        raise ParseError(f"unexpected token {tok.text!r}", tok.pos)


def parse_expression(text: str):
    """Parse an expression into an AST; raises :class:`ParseError` with position."""
    return _Parser(text).parse()


# -- structural queries ------------------------------------------------------

def _children(node):
    if isinstance(node, Neg):
        return (node.arg,)
    if isinstance(node, Fn):
        return (node.arg,)
    if isinstance(node, Bin):
        return (node.left, node.right)
    return ()


def walk(node):
    yield node
    for ch in _children(node):
        yield from walk(ch)


def depends_on_state(node) -> bool:
    return any(isinstance(n, (R2, Coord)) for n in walk(node))


def depends_on_time(node) -> bool:
    return any(isinstance(n, (TVar, Theta)) for n in walk(node))


def max_coordinate(node) -> int:
    return max((n.index for n in walk(node) if isinstance(n, Coord)), default=0)


def has_sqrt_of_state(node) -> bool:
    """True when sqrt is applied to a state-dependent subtree (kink at x=0)."""
    return any(isinstance(n, Fn) and n.name == "sqrt" and depends_on_state(n.arg)
               for n in walk(node))


def to_str(node) -> str:
    """Re-serialize an AST to parseable text."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, TVar):
        return "t"
    if isinstance(node, PeriodT):
        return "T"
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, R2):
        return "r2"
    if isinstance(node, Theta):
        return "theta_halfsine"
    if isinstance(node, Coord):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_str(node.arg)})"
    if isinstance(node, Fn):
        return f"{node.name}({to_str(node.arg)})"
    if isinstance(node, Bin):
        return f"({to_str(node.left)} {node.op} {to_str(node.right)})"
    raise TypeError(f"not an AST node: {node!r}")


# -- evaluation ----------------------------------------------------------------

def theta_halfsine(t_reduced, T: float):
    """T-periodic profile: sin(2*pi*t/T) on [0, T/2], zero on [T/2, T].

    ``t_reduced`` must already lie in [0, T); floats and arrays accepted.
    """
    s = np.sin((2.0 * np.pi / T) * t_reduced)
    return np.where(t_reduced < 0.5 * T, s, 0.0)


class EvalEnv:
    """Evaluation context: reduced time, period, and state coordinates.

    ``x`` is a sequence of 2N scalars (floats, arrays, or duals); ``r2`` is
    computed lazily from them.
    """

    __slots__ = ("t", "T", "x", "_r2")

    def __init__(self, t, T: float, x):
        self.t = t
        self.T = T
        self.x = x
        self._r2 = None

    @property
    def r2(self):
        if self._r2 is None:
            acc = self.x[0] * self.x[0]
            for xi in self.x[1:]:
                acc = acc + xi * xi
            self._r2 = acc
        return self._r2


def eval_node(node, env: EvalEnv):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, TVar):
        return env.t
    if isinstance(node, PeriodT):
        return env.T
    if isinstance(node, Pi):
        return np.pi
    if isinstance(node, R2):
        return env.r2
    if isinstance(node, Theta):
        return theta_halfsine(env.t, env.T)
    if isinstance(node, Coord):
        if node.index > len(env.x):
            raise EvaluationError(
                f"coordinate x{node.index} exceeds state dimension {len(env.x)}")
        return env.x[node.index - 1]
    if isinstance(node, Neg):
        return -eval_node(node.arg, env)
    if isinstance(node, Fn):
        a = eval_node(node.arg, env)
        if node.name == "sin":
            return duals.sin(a)
        if node.name == "cos":
            return duals.cos(a)
        if node.name == "exp":
            return duals.exp(a)
        if node.name == "ln":
            v = duals.value(a)
            if np.any(np.asarray(v) <= 0.0):
                raise EvaluationError("ln of non-positive value")
            return duals.log(a)
        if node.name == "sqrt":
            v = duals.value(a)
            if np.any(np.asarray(v) < 0.0):
                raise EvaluationError("sqrt of negative value")
            return duals.sqrt(a)
        raise EvaluationError(f"unknown function {node.name!r}")
    if isinstance(node, Bin):
        left = eval_node(node.left, env)
        right = eval_node(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            v = duals.value(right)
            if np.any(np.asarray(v) == 0.0):
                raise EvaluationError("division by zero")
            return left / right
        if node.op == "^":
            if not depends_on_state(node.right) and not depends_on_time(node.right):
                # constant exponent: power rule (exact for ln(.)^p at ln = 0)
                return left ** eval_node(node.right, EvalEnv(0.0, env.T, ()))
            return left ** right
        raise EvaluationError(f"unknown operator {node.op!r}")
    raise TypeError(f"not an AST node: {node!r}")
