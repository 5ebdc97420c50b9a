"""Analytic weight expressions: parsing, evaluation, differentiation.

Grammar (normative for the ``phi = "..."`` / ``f = "..."`` config keys):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' number)?
    atom   := number | 'x' | 'pi' | func '(' expr ')' | '(' expr ')' | '-' atom
    func   := sin | cos | tan | exp | log | sqrt | abs

Whitespace is ignored.  ``^`` takes a literal (constant) exponent so that
differentiation stays total.  Trees are immutable after construction and
safe to evaluate concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EvalDomainError, ExprSyntaxError

_FUNCS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
_BINOPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Expr:
    """One expression-tree node.

    ``kind`` is "num", "x", "pi", "neg", one of the binary operators
    ``+ - * / ^`` or a function name.  ``args`` holds the children;
    "num" nodes carry their value in ``value`` instead.
    """

    kind: str
    args: tuple["Expr", ...] = ()
    value: float | None = None

    def __post_init__(self):
        arity = {"num": 0, "x": 0, "pi": 0, "neg": 1}
        expect = arity.get(self.kind, 1 if self.kind in _FUNCS else 2)
        if self.kind not in arity and self.kind not in _FUNCS and self.kind not in _BINOPS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if len(self.args) != expect:
            raise ValueError(f"{self.kind!r} node expects {expect} children, got {len(self.args)}")
        if self.kind == "num" and self.value is None:
            raise ValueError("num node without value")
        if self.kind == "^" and self.args[1].kind != "num":
            raise ValueError("exponent must be a constant")

    def __str__(self) -> str:
        return pretty(self)


def num(v: float) -> Expr:
    return Expr("num", value=float(v))


X = Expr("x")
PI = Expr("pi")


def neg(a: Expr) -> Expr:
    return Expr("neg", (a,))


def add(a: Expr, b: Expr) -> Expr:
    return Expr("+", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    return Expr("-", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    return Expr("*", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    return Expr("/", (a, b))


def powc(base: Expr, exponent: float) -> Expr:
    return Expr("^", (base, num(exponent)))


def func(name: str, arg: Expr) -> Expr:
    return Expr(name, (arg,))


# ---------------------------------------------------------------------------
# parsing


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def fail(self, message: str):
        raise ExprSyntaxError(message, self.pos)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            node = Expr(op, (node, self.term()))
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            node = Expr(op, (node, self.factor()))
        return node

    def factor(self) -> Expr:
        node = self.atom()
        if self.peek() == "^":
            self.pos += 1
            self.skip_ws()
            if not (self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] == ".")):
                self.fail("non-constant exponent (a number literal is required)")
            node = Expr("^", (node, self.number()))
        return node

    def atom(self) -> Expr:
        ch = self.peek()
        if ch == "":
            self.fail("unexpected end of input")
        if ch == "-":
            self.pos += 1
            return Expr("neg", (self.atom(),))
        if ch == "(":
            self.pos += 1
            node = self.expr()
            if self.peek() != ")":
                self.fail("expected ')'")
            self.pos += 1
            return node
        if ch.isdigit() or ch == ".":
            return self.number()
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isalnum():
                self.pos += 1
            name = self.text[start:self.pos]
            if name == "x":
                return X
            if name == "pi":
                return PI
            if name in _FUNCS:
                if self.peek() != "(":
                    self.fail(f"expected '(' after {name!r}")
                self.pos += 1
                node = self.expr()
                if self.peek() != ")":
                    self.fail("expected ')'")
                self.pos += 1
                return Expr(name, (node,))
            self.pos = start
            self.fail(f"unknown identifier {name!r}")
        self.fail(f"unexpected character {ch!r}")

    def number(self) -> Expr:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(self.text) and self.text[self.pos] == ".":
            self.pos += 1
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
        if self.pos > start and self.pos < len(self.text) and self.text[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos].isdigit():
                while self.pos < len(self.text) and self.text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark  # "2e" is the number 2 followed by junk
        token = self.text[start:self.pos]
        if token in ("", "."):
            self.fail("expected a number")
        return num(float(token))


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into an expression tree; deterministic recursive descent."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(text)
    node = p.expr()
    p.skip_ws()
    if p.pos != len(text):
        p.fail(f"trailing input {text[p.pos:]!r}")
    return node


# ---------------------------------------------------------------------------
# evaluation

ArrayLike = Union[float, np.ndarray]


def _check(ok: np.ndarray | bool, node: Expr, x, what: str):
    ok = np.asarray(ok)
    if not ok.all():
        bad = np.asarray(x)[~ok] if np.asarray(x).shape == ok.shape else np.asarray(x)
        sample = float(np.atleast_1d(bad)[0]) if bad.size else float("nan")
        raise EvalDomainError(f"{what} in {pretty(node)!r} (e.g. at x = {sample!r})")


def eval_expr(e: Expr, x: ArrayLike) -> ArrayLike:
    """Evaluate ``e`` at ``x`` (scalar or ndarray) in IEEE double precision.

    Pure: identical inputs give bit-identical outputs.  Raises
    :class:`EvalDomainError` when a subexpression is evaluated outside its
    domain, naming the offending subexpression.
    """
    xa = np.asarray(x, dtype=float)
    out = _eval(e, xa)
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out)
    return out


def _eval(e: Expr, x: np.ndarray) -> np.ndarray:
    k = e.kind
    if k == "num":
        return np.full(x.shape, e.value) if x.ndim else np.float64(e.value)
    if k == "x":
        return x
    if k == "pi":
        return np.full(x.shape, np.pi) if x.ndim else np.float64(np.pi)
    if k == "neg":
        return -_eval(e.args[0], x)
    if k in ("+", "-", "*"):
        a, b = _eval(e.args[0], x), _eval(e.args[1], x)
        return a + b if k == "+" else (a - b if k == "-" else a * b)
    if k == "/":
        a, b = _eval(e.args[0], x), _eval(e.args[1], x)
        _check(b != 0, e, x, "division by zero")
        return a / b
    if k == "^":
        a = _eval(e.args[0], x)
        c = e.args[1].value
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.power(a, c)
        _check(np.isfinite(r) | ~np.isfinite(a), e, x, "power outside domain")
        return r
    u = _eval(e.args[0], x)
    if k == "sin":
        return np.sin(u)
    if k == "cos":
        return np.cos(u)
    if k == "tan":
        return np.tan(u)
    if k == "exp":
        return np.exp(u)
    if k == "log":
        _check(u > 0, e, x, "log of a non-positive value")
        return np.log(u)
    if k == "sqrt":
        _check(u >= 0, e, x, "sqrt of a negative value")
        return np.sqrt(u)
    if k == "abs":
        return np.abs(u)
    raise AssertionError(f"unreachable kind {k}")


# ---------------------------------------------------------------------------
# differentiation

_ZERO = num(0.0)
_ONE = num(1.0)


def _is_num(e: Expr, v: float | None = None) -> bool:
    return e.kind == "num" and (v is None or e.value == v)


def _literal(e: Expr) -> bool:
    if e.kind in ("num", "pi"):
        return True
    if e.kind == "x":
        return False
    return all(_literal(a) for a in e.args)


def fold_constants(e: Expr) -> Expr:
    """Collapse literal-only subtrees to single numbers (when finite)."""
    if e.kind in ("num", "x", "pi"):
        return e
    folded = Expr(e.kind, tuple(fold_constants(a) for a in e.args), e.value)
    if _literal(folded):
        try:
            v = eval_expr(folded, 0.0)
        except EvalDomainError:
            return folded
        if np.isfinite(v):
            return num(v)
    return folded


def _add(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    return sub(a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return _ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return _ZERO
    if _is_num(b, 1.0):
        return a
    return div(a, b)


def diff_expr(e: Expr) -> Expr:
    """Symbolic d/dx.  The result is evaluable wherever ``e`` is smooth;
    the derivative of ``abs`` is left as u/abs(u)*u', undefined at u = 0."""
    return fold_constants(_diff(e))


def _diff(e: Expr) -> Expr:
    k = e.kind
    if k in ("num", "pi"):
        return _ZERO
    if k == "x":
        return _ONE
    if k == "neg":
        return neg(_diff(e.args[0]))
    if k == "+":
        return _add(_diff(e.args[0]), _diff(e.args[1]))
    if k == "-":
        return _sub(_diff(e.args[0]), _diff(e.args[1]))
    if k == "*":
        a, b = e.args
        return _add(_mul(_diff(a), b), _mul(a, _diff(b)))
    if k == "/":
        a, b = e.args
        return _div(_sub(_mul(_diff(a), b), _mul(a, _diff(b))), mul(b, b))
    if k == "^":
        base, expo = e.args
        c = expo.value
        if c == 0:
            return _ZERO
        return _mul(_mul(num(c), powc(base, c - 1.0)), _diff(base))
    u = e.args[0]
    du = _diff(u)
    if k == "sin":
        return _mul(func("cos", u), du)
    if k == "cos":
        return neg(_mul(func("sin", u), du))
    if k == "tan":
        # 1/cos^2
        return _mul(_div(_ONE, powc(func("cos", u), 2.0)), du)
    if k == "exp":
        return _mul(func("exp", u), du)
    if k == "log":
        return _div(du, u)
    if k == "sqrt":
        return _div(du, _mul(num(2.0), func("sqrt", u)))
    if k == "abs":
        return _mul(_div(u, func("abs", u)), du)
    raise AssertionError(f"unreachable kind {k}")


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
_ATOM_PREC = 4


def _prec(e: Expr) -> int:
    return _PREC.get(e.kind, _ATOM_PREC)


def _wrap(e: Expr, minimum: int) -> str:
    s = pretty(e)
    return f"({s})" if _prec(e) < minimum else s


def pretty(e: Expr) -> str:
    """Render a tree to text that reparses to the identical tree."""
    k = e.kind
    if k == "num":
        return repr(e.value)
    if k in ("x", "pi"):
        return k
    if k == "neg":
        return "-" + _wrap(e.args[0], _ATOM_PREC)
    if k in ("+", "-"):
        # left-associative: right child of equal precedence needs parens
        return f"{_wrap(e.args[0], _PREC[k])} {k} {_wrap(e.args[1], _PREC[k] + 1)}"
    if k in ("*", "/"):
        return f"{_wrap(e.args[0], _PREC[k])}{k}{_wrap(e.args[1], _PREC[k] + 1)}"
    if k == "^":
        c = e.args[1].value
        if c < 0:
            # negative exponents cannot appear in a '^' literal; emit 1/u^|c|
            return f"1/{_wrap(e.args[0], _ATOM_PREC)}^{repr(-c)}"
        return f"{_wrap(e.args[0], _ATOM_PREC)}^{repr(c)}"
    return f"{k}({pretty(e.args[0])})"
