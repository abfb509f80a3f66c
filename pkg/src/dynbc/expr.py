"""Scalar expressions in the variables t, x, z, p.

All coefficient functions of a problem (diffusivity, right-hand sides,
boundary data, initial data, growth gauges) enter the package as small
expression trees parsed from text.  The grammar is plain infix arithmetic:

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Identifiers are restricted to the variables ``t x z p``, the constants
``pi e`` and the function names ``sin cos exp log sqrt abs tanh sign``.
The exponent of ``^`` must fold to a constant, which keeps symbolic
differentiation closed under the node set.  There is no simplification
beyond constant folding.

Trees are immutable; all operations here are pure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary",
    "parse", "evaluate", "diff", "to_str", "compile_expr", "free_variables",
]

VARIABLES = ("t", "x", "z", "p")
FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs", "tanh", "sign")
NAMED_CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # one of VARIABLES


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg' or a FUNCTIONS entry
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Unary, Binary]


# ---------------------------------------------------------------------------
# construction with constant folding

def _fold_unary(op: str, arg: Expr) -> Expr:
    if isinstance(arg, Const):
        try:
            return Const(_apply_unary(op, arg.value))
        except DomainError:
            pass
    return Unary(op, arg)


def _fold_binary(op: str, left: Expr, right: Expr) -> Expr:
    if isinstance(left, Const) and isinstance(right, Const):
        try:
            return Const(_apply_binary(op, left.value, right.value))
        except DomainError:
            pass
    return Binary(op, left, right)


def _apply_unary(op: str, v: float) -> float:
    if op == "neg":
        return -v
    if op == "sin":
        return math.sin(v)
    if op == "cos":
        return math.cos(v)
    if op == "exp":
        return math.exp(v)
    if op == "tanh":
        return math.tanh(v)
    if op == "abs":
        return abs(v)
    if op == "sign":
        return float((v > 0) - (v < 0))
    if op == "log":
        if v <= 0.0:
            raise DomainError(f"log of non-positive value {v}")
        return math.log(v)
    if op == "sqrt":
        if v < 0.0:
            raise DomainError(f"sqrt of negative value {v}")
        return math.sqrt(v)
    raise ValueError(f"unknown unary op {op!r}")


def _apply_binary(op: str, a: float, b: float) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0.0:
            raise DomainError("division by zero")
        return a / b
    if op == "^":
        if a == 0.0 and b < 0.0:
            raise DomainError("zero raised to negative power")
        if a < 0.0 and b != math.floor(b):
            raise DomainError(f"negative base {a} with non-integer exponent {b}")
        return a ** b
    raise ValueError(f"unknown binary op {op!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?|([A-Za-z_]+)|([()+\-*/^]))")
_NUMBER_RE = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []  # (kind, value, offset)
        self._scan()
        self.index = 0

    def _scan(self) -> None:
        text = self.text
        i = 0
        n = len(text)
        while i < n:
            if text[i].isspace():
                i += 1
                continue
            m = _NUMBER_RE.match(text, i)
            if m:
                self.tokens.append(("num", m.group(0), i))
                i = m.end()
                continue
            c = text[i]
            if c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
                continue
            if c in "()+-*/^":
                self.tokens.append(("op", c, i))
                i += 1
                continue
            raise ExprSyntaxError(f"unexpected character {c!r}", i)
        self.tokens.append(("end", "", n))

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.index]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.index]
        self.index += 1
        return tok


class _Parser:
    def __init__(self, text: str):
        self.tok = _Tokenizer(text)

    def parse(self) -> Expr:
        e = self._expr()
        kind, value, offset = self.tok.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {value!r}", offset)
        return e

    def _expr(self) -> Expr:
        e = self._term()
        while True:
            kind, value, _ = self.tok.peek()
            if kind == "op" and value in "+-":
                self.tok.next()
                e = _fold_binary(value, e, self._term())
            else:
                return e

    def _term(self) -> Expr:
        e = self._factor()
        while True:
            kind, value, _ = self.tok.peek()
            if kind == "op" and value in "*/":
                self.tok.next()
                e = _fold_binary(value, e, self._factor())
            else:
                return e

    def _factor(self) -> Expr:
        kind, value, _ = self.tok.peek()
        if kind == "op" and value == "-":
            self.tok.next()
            return _fold_unary("neg", self._factor())
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        kind, value, offset = self.tok.peek()
        if kind == "op" and value == "^":
            self.tok.next()
            exponent = self._factor()
            if not isinstance(exponent, Const):
                raise ExprSyntaxError("exponent must fold to a constant", offset)
            return _fold_binary("^", base, exponent)
        return base

    def _atom(self) -> Expr:
        kind, value, offset = self.tok.next()
        if kind == "num":
            return Const(float(value))
        if kind == "ident":
            if value in VARIABLES:
                return Var(value)
            if value in NAMED_CONSTANTS:
                return Const(NAMED_CONSTANTS[value])
            if value in FUNCTIONS:
                k, v, o = self.tok.next()
                if not (k == "op" and v == "("):
                    raise ExprSyntaxError(f"expected '(' after function {value!r}", o)
                arg = self._expr()
                k, v, o = self.tok.next()
                if not (k == "op" and v == ")"):
                    raise ExprSyntaxError("expected ')'", o)
                return _fold_unary(value, arg)
            raise UnknownIdentifier(f"unknown identifier {value!r}", offset)
        if kind == "op" and value == "(":
            e = self._expr()
            k, v, o = self.tok.next()
            if not (k == "op" and v == ")"):
                raise ExprSyntaxError("expected ')'", o)
            return e
        raise ExprSyntaxError(f"unexpected token {value!r}" if value else "unexpected end of input", offset)


def parse(text: str) -> Expr:
    """Parse expression text into a tree.

    Raises ExprSyntaxError (with byte offset) on malformed input and
    UnknownIdentifier on names outside the allowed symbol set.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# evaluation

def evaluate(e: Expr, t: float = 0.0, x: float = 0.0, z: float = 0.0, p: float = 0.0) -> float:
    """Evaluate to an IEEE double; unused variables are ignored.

    Raises DomainError (carrying the offending node) for log/sqrt of a
    negative argument or division by zero.
    """
    env = {"t": float(t), "x": float(x), "z": float(z), "p": float(p)}
    return _eval(e, env)


def _eval(e: Expr, env: dict) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Unary):
        v = _eval(e.arg, env)
        try:
            return _apply_unary(e.op, v)
        except DomainError as exc:
            raise DomainError(str(exc), node=e) from None
    if isinstance(e, Binary):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        try:
            return _apply_binary(e.op, a, b)
        except DomainError as exc:
            raise DomainError(str(exc), node=e) from None
    raise TypeError(f"not an Expr node: {e!r}")


# ---------------------------------------------------------------------------
# differentiation

def diff(e: Expr, v: str) -> Expr:
    """Exact symbolic derivative with respect to v in {t, x, z, p}.

    abs differentiates to sign, which evaluates to 0 at the kink; this is
    the one convention the node set needs to stay total.
    """
    if v not in VARIABLES:
        raise ValueError(f"cannot differentiate with respect to {v!r}")
    return _diff(e, v)


def _diff(e: Expr, v: str) -> Expr:
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0 if e.name == v else 0.0)
    if isinstance(e, Unary):
        du = _diff(e.arg, v)
        if e.op == "neg":
            return _fold_unary("neg", du)
        if e.op == "sin":
            outer = _fold_unary("cos", e.arg)
        elif e.op == "cos":
            outer = _fold_unary("neg", _fold_unary("sin", e.arg))
        elif e.op == "exp":
            outer = e
        elif e.op == "log":
            outer = _fold_binary("/", Const(1.0), e.arg)
        elif e.op == "sqrt":
            outer = _fold_binary("/", Const(0.5), e)
        elif e.op == "tanh":
            outer = _fold_binary("-", Const(1.0), _fold_binary("^", e, Const(2.0)))
        elif e.op == "abs":
            outer = _fold_unary("sign", e.arg)
        elif e.op == "sign":
            outer = Const(0.0)  # flat away from 0; 0 at 0 by the abs convention
        else:
            raise ValueError(f"unknown unary op {e.op!r}")
        return _fold_binary("*", outer, du)
    if isinstance(e, Binary):
        dl = _diff(e.left, v)
        dr = _diff(e.right, v)
        if e.op == "+":
            return _fold_binary("+", dl, dr)
        if e.op == "-":
            return _fold_binary("-", dl, dr)
        if e.op == "*":
            return _fold_binary("+", _fold_binary("*", dl, e.right), _fold_binary("*", e.left, dr))
        if e.op == "/":
            num = _fold_binary("-", _fold_binary("*", dl, e.right), _fold_binary("*", e.left, dr))
            return _fold_binary("/", num, _fold_binary("^", e.right, Const(2.0)))
        if e.op == "^":
            c = e.right
            if not isinstance(c, Const):
                raise ValueError("exponent must be a constant")
            powm1 = _fold_binary("^", e.left, Const(c.value - 1.0))
            return _fold_binary("*", _fold_binary("*", c, powm1), dl)
    raise TypeError(f"not an Expr node: {e!r}")


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, (Const, Var)):
        # a folded negative constant prints with a leading minus
        if isinstance(e, Const) and (e.value < 0 or (e.value == 0 and math.copysign(1, e.value) < 0)):
            return _PREC["neg"]
        return 5
    if isinstance(e, Unary):
        return _PREC["neg"] if e.op == "neg" else 5
    return _PREC[e.op]


def to_str(e: Expr) -> str:
    """Render with the fewest parentheses that still reparse to the same tree."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_str(e.arg)
            if _prec(e.arg) < _PREC["neg"]:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.op}({to_str(e.arg)})"
    lhs, rhs = to_str(e.left), to_str(e.right)
    prec = _PREC[e.op]
    if _prec(e.left) < prec or (e.op == "^" and _prec(e.left) <= prec):
        lhs = f"({lhs})"
    # right operand needs parens at equal precedence too: a-(b-c), a/(b/c), a+(b+c)
    if e.op != "^" and _prec(e.right) <= prec:
        rhs = f"({rhs})"
    return f"{lhs}{e.op}{rhs}"


# ---------------------------------------------------------------------------
# compilation to a numpy-vectorized callable

_NP_FUNCS = {
    "sin": "_np.sin", "cos": "_np.cos", "exp": "_np.exp", "log": "_np.log",
    "sqrt": "_np.sqrt", "abs": "_np.abs", "tanh": "_np.tanh", "sign": "_np.sign",
}


def _pycode(e: Expr) -> str:
    if isinstance(e, Const):
        return f"({e.value!r})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{_pycode(e.arg)})"
        return f"{_NP_FUNCS[e.op]}({_pycode(e.arg)})"
    op = "**" if e.op == "^" else e.op
    return f"({_pycode(e.left)}{op}{_pycode(e.right)})"


def compile_expr(e: Expr):
    """Compile to ``f(t=0, x=0, z=0, p=0)`` broadcasting over numpy arrays.

    The compiled form does not police domains: out-of-domain points yield
    nan/inf under numpy semantics (callers check finiteness).  Use
    ``evaluate`` for the strict scalar contract.
    """
    src = f"def _f(t=0.0, x=0.0, z=0.0, p=0.0):\n    return {_pycode(e)}\n"
    ns = {"_np": np}
    exec(src, ns)
    f = ns["_f"]
    f.expr = e
    return f


def free_variables(e: Expr) -> set[str]:
    """The variable names the expression actually reads."""
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)
