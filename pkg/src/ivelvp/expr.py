"""Scalar arithmetic expressions for endpoint functions, dynamics and costs.

Grammar, loosest binding first::

    expr    := expr ('+' | '-') expr            left assoc
             | expr ('*' | '/') expr            left assoc
             | '-' expr                         prefix
             | expr '^' expr                    right assoc
             | NUMBER | NAME | NAME '(' args ')' | '(' expr ')'
    cond    := expr ('<' | '<=' | '>' | '>=' | '==') expr

``cond`` is only accepted as the first argument of ``ite(cond, a, b)``.
There is no implicit multiplication. Evaluation works on scalars or on numpy
arrays; in the array case each ``ite`` branch is evaluated only where it is
selected, so a branch that would fail elsewhere (``ln`` of a negative, say)
does not raise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import IvelvpError

__all__ = [
    "ExprError",
    "ParseError",
    "EvalError",
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Compare",
    "parse",
    "to_source",
    "FUNCTIONS",
]


class ExprError(IvelvpError, ValueError):
    kind = "expr"


class ParseError(ExprError):
    """Syntax error, unknown identifier or arity mismatch; ``offset`` is a byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ExprError):
    pass


# name -> arity
FUNCTIONS = {
    "exp": 1,
    "ln": 1,
    "sin": 1,
    "cos": 1,
    "abs": 1,
    "sqrt": 1,
    "min": 2,
    "max": 2,
    "ite": 3,
}


class Expr:
    """Base class of expression nodes. Nodes are immutable and hashable."""

    def variables(self) -> set[str]:
        out: set[str] = set()
        _collect_vars(self, out)
        return out

    def __call__(self, **env) -> float:
        return self.eval(env)

    def eval(self, env: Mapping[str, float]) -> float:
        """Evaluate at a single point; raises :class:`EvalError` on domain errors."""
        arrays = {k: np.asarray(v, dtype=float) for k, v in env.items()}
        return float(_eval(self, arrays))

    def eval_array(self, env: Mapping[str, object], size: int | None = None) -> np.ndarray:
        """Evaluate elementwise; ``env`` values are scalars or 1-D arrays of equal length."""
        arrays = {k: np.asarray(v, dtype=float) for k, v in env.items()}
        if size is None:
            size = max((a.size for a in arrays.values() if a.ndim == 1), default=1)
        out = np.asarray(_eval(self, arrays), dtype=float)
        return np.broadcast_to(out, (size,)).copy() if out.ndim == 0 else out

    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Compare(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple


def _collect_vars(node: Expr, out: set) -> None:
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Neg):
        _collect_vars(node.arg, out)
    elif isinstance(node, (BinOp, Compare)):
        _collect_vars(node.left, out)
        _collect_vars(node.right, out)
    elif isinstance(node, Call):
        for a in node.args:
            _collect_vars(a, out)


# ---------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|[-+*/^(),<>])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str  # 'num' | 'name' | 'op' | 'end'
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8"))


# ------------------------------------------------------------------- parser

_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_PREFIX_MINUS = 30
_COMPARISONS = ("<", "<=", ">", ">=", "==")


class _Parser:
    def __init__(self, src: str, variables):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0
        self.variables = None if variables is None else set(variables)

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        return ParseError(msg, _byte_offset(self.src, tok.pos))

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.peek()
        if tok.text != text or tok.kind == "end":
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise self.error(f"expected {text!r}, found {found}")
        return self.advance()

    def parse_all(self) -> Expr:
        if self.peek().kind == "end":
            raise self.error("empty expression")
        node = self.expression(0)
        tok = self.peek()
        if tok.kind != "end":
            if tok.text in _COMPARISONS:
                raise self.error("comparisons are only allowed as the first argument of ite")
            raise self.error(f"unexpected {tok.text!r}")
        return node

    def expression(self, rbp: int) -> Expr:
        left = self.prefix()
        while True:
            tok = self.peek()
            lbp = _INFIX.get(tok.text, 0) if tok.kind == "op" else 0
            if lbp <= rbp:
                break
            self.advance()
            if tok.text == "^":
                right = self.expression(_INFIX["^"] - 1)
            else:
                right = self.expression(lbp)
            left = BinOp(tok.text, left, right)
        return left

    def prefix(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            if self.peek().text == "(" and self.peek().kind == "op":
                return self.call(tok)
            if tok.text in FUNCTIONS:
                raise self.error(f"function {tok.text!r} used without arguments", tok)
            if self.variables is not None and tok.text not in self.variables:
                raise self.error(f"unknown identifier {tok.text!r}", tok)
            return Var(tok.text)
        if tok.text == "-":
            return Neg(self.expression(_PREFIX_MINUS))
        if tok.text == "(":
            node = self.expression(0)
            self.expect(")")
            return node
        if tok.kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {tok.text!r}", tok)

    def call(self, name_tok: _Tok) -> Expr:
        name = name_tok.text
        if name not in FUNCTIONS:
            raise self.error(f"unknown function {name!r}", name_tok)
        self.expect("(")
        args = []
        if self.peek().text != ")":
            while True:
                if name == "ite" and not args:
                    args.append(self.condition())
                else:
                    args.append(self.expression(0))
                if self.peek().text == ",":
                    self.advance()
                    continue
                break
        self.expect(")")
        if len(args) != FUNCTIONS[name]:
            raise self.error(
                f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}", name_tok
            )
        return Call(name, tuple(args))

    def condition(self) -> Expr:
        left = self.expression(0)
        tok = self.peek()
        if tok.text not in _COMPARISONS:
            raise self.error("expected a comparison in ite condition")
        self.advance()
        right = self.expression(0)
        return Compare(tok.text, left, right)


def parse(src: str, variables: Iterable[str] | None = None) -> Expr:
    """Parse ``src``; when ``variables`` is given, any other identifier is rejected."""
    if not isinstance(src, str):
        raise TypeError("expression source must be a string")
    return _Parser(src, variables).parse_all()


# ------------------------------------------------------------------ printer

def to_source(node: Expr) -> str:
    """Fully parenthesized source text; ``parse(to_source(e)) == e``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Compare):
        # only ever the first argument of ite, where the grammar wants it bare
        return f"{to_source(node.left)} {node.op} {to_source(node.right)}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------- evaluation

def _subset(env: dict, mask: np.ndarray) -> dict:
    return {k: (v[mask] if v.ndim == 1 else v) for k, v in env.items()}


def _check_finite(value, what: str):
    if not np.all(np.isfinite(value)):
        raise EvalError(f"{what} produced a non-finite value")
    return value


def _eval(node: Expr, env: dict):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise EvalError(f"variable {node.name!r} is not bound") from None
    if isinstance(node, Neg):
        return -_eval(node.arg, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        with np.errstate(all="ignore"):
            if node.op == "+":
                return _check_finite(a + b, "addition")
            if node.op == "-":
                return _check_finite(a - b, "subtraction")
            if node.op == "*":
                return _check_finite(a * b, "multiplication")
            if node.op == "/":
                if np.any(b == 0):
                    raise EvalError("division by zero")
                return _check_finite(a / b, "division")
            if node.op == "^":
                return _power(a, b)
        raise EvalError(f"unknown operator {node.op!r}")
    if isinstance(node, Call):
        return _call(node, env)
    if isinstance(node, Compare):
        raise EvalError("a comparison has no numeric value outside ite")
    raise TypeError(f"not an expression node: {node!r}")


def _power(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if np.any((a == 0) & (b < 0)):
        raise EvalError("zero raised to a negative power")
    if np.any((a < 0) & (b != np.round(b))):
        raise EvalError("negative base raised to a non-integer power")
    with np.errstate(all="ignore"):
        out = np.power(a, b)
    return _check_finite(out, "power")


_CMP = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
    "==": np.equal,
}


def _call(node: Call, env: dict):
    name = node.name
    if name == "ite":
        cond, a, b = node.args
        mask = np.asarray(_CMP[cond.op](_eval(cond.left, env), _eval(cond.right, env)))
        if mask.ndim == 0:
            return _eval(a if bool(mask) else b, env)
        out = np.empty(mask.shape, dtype=float)
        if mask.any():
            out[mask] = _eval(a, _subset(env, mask))
        if (~mask).any():
            out[~mask] = _eval(b, _subset(env, ~mask))
        return out
    args = [_eval(x, env) for x in node.args]
    x = args[0]
    with np.errstate(all="ignore"):
        if name == "exp":
            return _check_finite(np.exp(x), "exp")
        if name == "ln":
            if np.any(np.asarray(x) <= 0):
                raise EvalError("ln of a non-positive number")
            return np.log(x)
        if name == "sqrt":
            if np.any(np.asarray(x) < 0):
                raise EvalError("sqrt of a negative number")
            return np.sqrt(x)
        if name == "sin":
            return np.sin(x)
        if name == "cos":
            return np.cos(x)
        if name == "abs":
            return np.abs(x)
        if name == "min":
            return np.minimum(x, args[1])
        if name == "max":
            return np.maximum(x, args[1])
    raise EvalError(f"unknown function {name!r}")


def as_expr(src, variables: Iterable[str] | None = None) -> Expr:
    """Accept an :class:`Expr`, a source string or a number."""
    if isinstance(src, Expr):
        return src
    if isinstance(src, (int, float)) and not isinstance(src, bool) and math.isfinite(src):
        return Num(float(src))
    return parse(src, variables)
