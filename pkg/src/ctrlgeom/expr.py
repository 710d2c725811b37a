"""Recursive-descent parser for rational configuration functions.

Grammar (whitespace-insensitive, no implicit multiplication)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-'? atom ('^' (INT | 'n'))?
    atom   := NUMBER | SYMBOL | '(' expr ')'

``^`` binds tighter than the unary minus on its base, so ``-a^2`` is
``-(a^2)``.  Numbers are decimal literals with an optional exponent and are
parsed to binary floating point.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Union

from . import jet as jetlib
from .jet import Jet

BASE_SYMBOLS = frozenset({"S", "a", "b", "f", "n"})


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownSymbol(ValueError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown symbol {name!r} at byte offset {offset}")
        self.name = name
        self.offset = offset


class UnboundSymbol(KeyError):
    pass


Span = tuple[int, int]


@dataclass(frozen=True)
class Number:
    value: float
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Symbol:
    name: str
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Div:
    left: "Node"
    right: "Node"
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class PowInt:
    base: "Node"
    # nonnegative int literal, or "n"
    exponent: Union[int, str]
    span: Span = field(default=(0, 0), compare=False, repr=False)


Node = Union[Number, Symbol, Neg, Add, Sub, Mul, Div, PowInt]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    offset: int  # byte offset


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), _byte(text, pos)))
        pos = m.end()
    toks.append(_Tok("end", "", _byte(text, len(text))))
    return toks


def _byte(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, symbols: frozenset):
        self.toks = _tokenize(text)
        self.i = 0
        self.symbols = symbols

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def _fail(self, expected: str):
        t = self.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"expected {expected}, found {found}", t.offset)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            if self.tok.kind in ("num", "name") or self.tok.text == "(":
                self._fail("operator (implicit multiplication is not supported)")
            self._fail("operator or end of input")
        return node

    def expr(self) -> Node:
        start = self.tok.offset
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self._advance().text
            rhs = self.term()
            cls = Add if op == "+" else Sub
            node = cls(node, rhs, span=(start, self.tok.offset))
        return node

    def term(self) -> Node:
        start = self.tok.offset
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self._advance().text
            rhs = self.factor()
            cls = Mul if op == "*" else Div
            node = cls(node, rhs, span=(start, self.tok.offset))
        return node

    def factor(self) -> Node:
        start = self.tok.offset
        negate = False
        if self.tok.kind == "op" and self.tok.text == "-":
            self._advance()
            negate = True
        node = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self._advance()
            t = self.tok
            if t.kind == "num" and re.fullmatch(r"\d+", t.text):
                self._advance()
                exponent: Union[int, str] = int(t.text)
            elif t.kind == "name" and t.text == "n":
                self._advance()
                exponent = "n"
            else:
                self._fail("integer literal or 'n' as exponent (non-integer powers are not supported)")
            node = PowInt(node, exponent, span=(start, self.tok.offset))
        if negate:
            node = Neg(node, span=(start, self.tok.offset))
        return node

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self._advance()
            return Number(float(t.text), span=(t.offset, self.tok.offset))
        if t.kind == "name":
            if t.text not in self.symbols:
                raise UnknownSymbol(t.text, t.offset)
            self._advance()
            return Symbol(t.text, span=(t.offset, self.tok.offset))
        if t.kind == "op" and t.text == "(":
            self._advance()
            node = self.expr()
            if not (self.tok.kind == "op" and self.tok.text == ")"):
                self._fail("')'")
            self._advance()
            return node
        self._fail("number, symbol or '('")


def parse(text: str, constants: Mapping[str, float] | None = None) -> Node:
    """Parse ``text`` into an AST over {S, a, b, f, n} plus declared constants."""
    symbols = BASE_SYMBOLS | frozenset(constants or ())
    return _Parser(text, symbols).parse()


# -- printing ---------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2}


def _fmt_number(x: float) -> str:
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def pretty_print(node: Node) -> str:
    """Render with the fewest parentheses that still re-parse to the same tree."""
    if isinstance(node, Number):
        return _fmt_number(node.value)
    if isinstance(node, Symbol):
        return node.name
    if isinstance(node, Neg):
        inner = node.operand
        if isinstance(inner, (Number, Symbol, PowInt)):
            return "-" + pretty_print(inner)
        return "-(" + pretty_print(inner) + ")"
    if isinstance(node, PowInt):
        base = node.base
        b = pretty_print(base)
        if not isinstance(base, (Number, Symbol)):
            b = "(" + b + ")"
        return f"{b}^{node.exponent}"
    prec = _PREC[type(node)]
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
    left = pretty_print(node.left)
    if type(node.left) in _PREC and _PREC[type(node.left)] < prec:
        left = "(" + left + ")"
    right = pretty_print(node.right)
    if type(node.right) in _PREC and _PREC[type(node.right)] <= prec:
        right = "(" + right + ")"
    return left + op + right


# -- evaluation ---------------------------------------------------------------


def symbols_in(node: Node) -> set[str]:
    if isinstance(node, Symbol):
        return {node.name}
    if isinstance(node, Number):
        return set()
    if isinstance(node, Neg):
        return symbols_in(node.operand)
    if isinstance(node, PowInt):
        extra = {"n"} if node.exponent == "n" else set()
        return symbols_in(node.base) | extra
    return symbols_in(node.left) | symbols_in(node.right)


def evaluate(node: Node, bindings: Mapping, int_bindings: Mapping[str, int] | None = None):
    """Evaluate over jets or plain floats.

    ``bindings`` maps symbols to jets or numbers; ``int_bindings`` carries the
    integer filter order ``n`` (also usable as an ordinary value).
    """
    int_bindings = dict(int_bindings or {})
    if "n" in int_bindings:
        n = int_bindings["n"]
        if isinstance(n, bool) or int(n) != n or n < 1:
            raise ValueError(f"n must bind to an integer >= 1, got {n!r}")

    def lookup(name: str):
        if name in bindings:
            return bindings[name]
        if name in int_bindings:
            return float(int_bindings[name])
        raise UnboundSymbol(name)

    def ev(nd):
        if isinstance(nd, Number):
            return nd.value
        if isinstance(nd, Symbol):
            return lookup(nd.name)
        if isinstance(nd, Neg):
            return -ev(nd.operand)
        if isinstance(nd, Add):
            return ev(nd.left) + ev(nd.right)
        if isinstance(nd, Sub):
            return ev(nd.left) - ev(nd.right)
        if isinstance(nd, Mul):
            return ev(nd.left) * ev(nd.right)
        if isinstance(nd, Div):
            num, den = ev(nd.left), ev(nd.right)
            if not isinstance(den, Jet) and abs(den) <= jetlib.EPS_DEN:
                raise jetlib.DivisionBySingularJet(den)
            return num / den
        if isinstance(nd, PowInt):
            k = nd.exponent
            if k == "n":
                if "n" not in int_bindings:
                    raise UnboundSymbol("n")
                k = int(int_bindings["n"])
            return jetlib.powi(ev(nd.base), k)
        raise TypeError(f"not an expression node: {nd!r}")

    return ev(node)


def eval_jet(
    node: Node,
    bindings: Mapping,
    int_bindings: Mapping[str, int] | None = None,
    nvars: int | None = None,
    order: int | None = None,
) -> Jet:
    """Evaluate to a jet; float bindings and results are lifted to constants."""
    template = next((v for v in bindings.values() if isinstance(v, Jet)), None)
    if template is not None:
        nvars, order = template.nvars, template.order
    elif nvars is None or order is None:
        raise ValueError("no jet binding given; pass nvars and order")
    out = evaluate(node, bindings, int_bindings)
    if not isinstance(out, Jet):
        out = jetlib.constant(float(out), nvars, order)
    return out
