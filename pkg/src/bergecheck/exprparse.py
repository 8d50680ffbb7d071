"""Arithmetic expressions over x1..xn, y1..ym with extended-real evaluation.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?            # right associative, binds tighter than '-'
    atom   := NUMBER | 'inf' | VAR | FUNC '(' expr (',' expr)? ')' | '(' expr ')'

``-x1^2`` therefore parses as ``neg(pow(x1, 2))``.  ``min`` and ``max`` take two
arguments; ``exp``, ``log``, ``abs``, ``sqrt`` take one.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

from .errors import DimensionError, DomainError, ExprSyntaxError

UNARY_OPS = ("neg", "exp", "log", "abs", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div", "pow", "min", "max")
_FUNCS_1 = ("exp", "log", "abs", "sqrt")
_FUNCS_2 = ("min", "max")
_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    axis: str  # "x" or "y"
    index: int  # 0-based


@dataclass(frozen=True)
class Unary:
    op: str
    child: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Unary, Binary]


# --------------------------------------------------------------------------- lexer

@dataclass(frozen=True)
class Token:
    kind: str  # NUM, IDENT, OP, LPAREN, RPAREN, COMMA, END
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<NUM>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<IDENT>[^\W\d]\w*)"
    r"|(?P<OP>[-+*/^])"
    r"|(?P<LPAREN>\()|(?P<RPAREN>\))|(?P<COMMA>,))"
)


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens; shared with the ordinal mini-syntax."""
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastgroup is None:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(bad, f"unexpected character {text[bad]!r}")
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(Token("END", "", n))
    return tokens


class TokenStream:
    def __init__(self, tokens: Sequence[Token]):
        self._tokens = list(tokens)
        self._i = 0

    @property
    def peek(self) -> Token:
        return self._tokens[self._i]

    def next(self) -> Token:
        tok = self._tokens[self._i]
        if tok.kind != "END":
            self._i += 1
        return tok

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        tok = self.peek
        if tok.kind == kind and (text is None or tok.text == text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.accept(kind, text)
        if tok is None:
            want = text or kind
            got = self.peek.text or "end of input"
            raise ExprSyntaxError(self.peek.pos, f"expected {want!r}, got {got!r}")
        return tok


# -------------------------------------------------------------------------- parser

_VAR_RE = re.compile(r"^([xy])([1-9]\d*)$")


class _Parser:
    def __init__(self, text: str, x_dim: int, y_dim: int):
        self.ts = TokenStream(tokenize(text))
        self.dims = {"x": x_dim, "y": y_dim}

    def parse(self) -> Expr:
        node = self.expr()
        tok = self.ts.peek
        if tok.kind != "END":
            raise ExprSyntaxError(tok.pos, f"unexpected {tok.text!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            if self.ts.accept("OP", "+"):
                node = Binary("add", node, self.term())
            elif self.ts.accept("OP", "-"):
                node = Binary("sub", node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            if self.ts.accept("OP", "*"):
                node = Binary("mul", node, self.unary())
            elif self.ts.accept("OP", "/"):
                node = Binary("div", node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        if self.ts.accept("OP", "-"):
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.ts.accept("OP", "^"):
            return Binary("pow", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.ts.next()
        if tok.kind == "NUM":
            return Const(float(tok.text))
        if tok.kind == "LPAREN":
            node = self.expr()
            self.ts.expect("RPAREN")
            return node
        if tok.kind == "IDENT":
            name = tok.text
            if name == "inf":
                return Const(math.inf)
            m = _VAR_RE.match(name)
            if m:
                axis, k = m.group(1), int(m.group(2))
                if k > self.dims[axis]:
                    raise DimensionError(
                        f"{name} at position {tok.pos}: {axis}-dimension is {self.dims[axis]}"
                    )
                return Var(axis, k - 1)
            if name in _FUNCS_1 or name in _FUNCS_2:
                self.ts.expect("LPAREN")
                first = self.expr()
                if name in _FUNCS_2:
                    self.ts.expect("COMMA")
                    second = self.expr()
                    self.ts.expect("RPAREN")
                    return Binary(name, first, second)
                self.ts.expect("RPAREN")
                return Unary(name, first)
            raise ExprSyntaxError(tok.pos, f"unknown identifier {name!r}")
        got = tok.text or "end of input"
        raise ExprSyntaxError(tok.pos, f"unexpected {got!r}")


def parse(text: str, x_dim: int, y_dim: int) -> Expr:
    """Parse ``text`` into an immutable AST, checking variable indices."""
    if not text or not text.strip():
        raise ExprSyntaxError(0, "empty expression")
    return _Parser(text, x_dim, y_dim).parse()


def render(node: Expr) -> str:
    """Fully parenthesized text that :func:`parse` maps back to ``node``."""
    if isinstance(node, Const):
        if math.isinf(node.value):
            return "inf" if node.value > 0 else "(-inf)"
        if node.value < 0:
            return f"(-{-node.value!r})"
        return repr(node.value)
    if isinstance(node, Var):
        return f"{node.axis}{node.index + 1}"
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{render(node.child)})"
        return f"{node.op}({render(node.child)})"
    if node.op in _INFIX:
        return f"({render(node.left)} {_INFIX[node.op]} {render(node.right)})"
    return f"{node.op}({render(node.left)}, {render(node.right)})"


def walk(node: Expr) -> Iterator[Expr]:
    yield node
    if isinstance(node, Unary):
        yield from walk(node.child)
    elif isinstance(node, Binary):
        yield from walk(node.left)
        yield from walk(node.right)


def check_dims(node: Expr, x_dim: int, y_dim: int) -> None:
    dims = {"x": x_dim, "y": y_dim}
    for sub in walk(node):
        if isinstance(sub, Var) and sub.index >= dims[sub.axis]:
            raise DimensionError(f"{sub.axis}{sub.index + 1} exceeds dimension {dims[sub.axis]}")


# ------------------------------------------------------------- extended-real ops

def ext_add(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b) and a != b:
        raise DomainError("(+inf) + (-inf) is undefined")
    return a + b


def ext_mul(a: float, b: float) -> float:
    if (a == 0 and math.isinf(b)) or (b == 0 and math.isinf(a)):
        raise DomainError("0 * inf is undefined")
    return a * b


def ext_div(a: float, b: float) -> float:
    if b == 0:
        if a == 0:
            raise DomainError("0/0 is undefined")
        return math.inf if a > 0 else -math.inf
    if math.isinf(a) and math.isinf(b):
        raise DomainError("inf/inf is undefined")
    return a / b


def _is_odd_integer(e: float) -> bool:
    return math.isfinite(e) and e == int(e) and int(e) % 2 == 1


def ext_pow(a: float, e: float) -> float:
    if a == 0 and e < 0:
        # 0^-k = 1/0^k; odd k keeps the sign of a signed zero
        return -math.inf if (math.copysign(1.0, a) < 0 and _is_odd_integer(e)) else math.inf
    if a < 0 and math.isfinite(e) and e != int(e):
        raise DomainError(f"negative base {a} with non-integer exponent {e}")
    try:
        r = math.pow(a, e)
    except OverflowError:
        return -math.inf if (a < 0 and _is_odd_integer(e)) else math.inf
    except ValueError as exc:
        raise DomainError(f"pow({a}, {e}): {exc}") from None
    return r


def _unary(op: str, a: float) -> float:
    if op == "neg":
        return -a
    if op == "abs":
        return abs(a)
    if op == "exp":
        try:
            return math.exp(a)
        except OverflowError:
            return math.inf
    if op == "log":
        if a <= 0:
            raise DomainError(f"log of nonpositive value {a}")
        return math.log(a)
    if op == "sqrt":
        if a < 0:
            raise DomainError(f"sqrt of negative value {a}")
        return math.sqrt(a)
    raise ValueError(f"unknown unary op {op!r}")


def _binary(op: str, a: float, b: float) -> float:
    if op == "add":
        return ext_add(a, b)
    if op == "sub":
        return ext_add(a, -b)
    if op == "mul":
        return ext_mul(a, b)
    if op == "div":
        return ext_div(a, b)
    if op == "pow":
        return ext_pow(a, b)
    if op == "min":
        return min(a, b)
    if op == "max":
        return max(a, b)
    raise ValueError(f"unknown binary op {op!r}")


def evaluate(node: Expr, x: Sequence[float], y: Sequence[float]) -> float:
    """Value of ``node`` at ``(x, y)`` in the extended reals.

    Raises DomainError where the value is undefined; NaN never escapes.
    """
    env = {"x": x, "y": y}

    def ev(n: Expr) -> float:
        if isinstance(n, Const):
            return n.value
        if isinstance(n, Var):
            return float(env[n.axis][n.index])
        if isinstance(n, Unary):
            return _unary(n.op, ev(n.child))
        return _binary(n.op, ev(n.left), ev(n.right))

    r = ev(node)
    if math.isnan(r):
        raise DomainError("expression evaluates to NaN")
    return r


# `eval` is the name the rest of the docs use; keep a builtin-safe alias.
eval_expr = evaluate
