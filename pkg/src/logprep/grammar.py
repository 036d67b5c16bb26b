"""Concrete text grammar for terms.

Infix `+ - * /` with the usual precedence, rational powers written
`^(p/q)`, function forms `abs log exp inv root min max logstar expstar
series piece`, variables `t1..tn` and `x`.  Division desugars to
multiplication by `inv(...)` except when both operands are numeric
literals, which fold into one exact rational constant.  `print_term`
emits a string that re-parses to a structurally identical tree.

Registered series names are callable directly (`arctan(e)`), and always
print in the explicit `series(name; e)` form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .terms import (
    Abs, Add, Atom, BUILTIN_SERIES, Const, Exp, Guarded, Inv, Log, Max, Min,
    Mul, NamedSeries, Neg, Pow, Root, SeriesDef, Term, TruncExp, TruncLog,
    Var, VarContext,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError("span start after end")


@dataclass
class ParseError(Exception):
    span: SourceSpan
    expected: str
    found: str

    def __str__(self) -> str:
        return (
            f"{self.line_col()}: expected {self.expected}, found {self.found}"
        )

    def line_col(self) -> str:
        return f"{self.span.line}:{self.span.column} (offset {self.span.start})"


_TOKEN_RE = re.compile(
    r"(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|!=|->|[-+*/^(){},;&<>])"
    r"|(?P<ws>\s+)"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num | ident | op | eof
    text: str
    span: SourceSpan


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(pos, pos + 1, line, pos - line_start + 1)
            raise ParseError(span, "a token", repr(text[pos]))
        kind = m.lastgroup or ""
        lexeme = m.group()
        if kind != "ws":
            span = SourceSpan(pos, m.end(), line, pos - line_start + 1)
            tokens.append(_Token(kind, lexeme, span))
        else:
            for i, ch in enumerate(lexeme):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        pos = m.end()
    eof_span = SourceSpan(pos, pos, line, pos - line_start + 1)
    tokens.append(_Token("eof", "", eof_span))
    return tokens


_FUNCTIONS = {
    "abs", "log", "exp", "inv", "root", "min", "max",
    "logstar", "expstar", "series", "piece",
}


class _Parser:
    def __init__(
        self,
        text: str,
        ctx: VarContext,
        series: Optional[dict[str, SeriesDef]] = None,
    ) -> None:
        self.ctx = ctx
        self.tokens = _lex(text)
        self.pos = 0
        self.series = dict(BUILTIN_SERIES)
        if series:
            self.series.update(series)

    # -- token plumbing

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.text != text:
            self.fail(repr(text), tok)
        return self.advance()

    def fail(self, expected: str, tok: Optional[_Token] = None) -> None:
        tok = tok or self.peek()
        found = repr(tok.text) if tok.kind != "eof" else "end of input"
        raise ParseError(tok.span, expected, found)

    # -- grammar

    def parse(self) -> Term:
        t = self.expr()
        if self.peek().kind != "eof":
            self.fail("end of input")
        return t

    def expr(self) -> Term:
        t = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.advance().text
            rhs = self.term()
            t = Add(t, rhs) if op == "+" else Add(t, Neg(rhs))
        return t

    def term(self) -> Term:
        t = self.factor()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.advance().text
            rhs = self.factor()
            if op == "*":
                t = Mul(t, rhs)
            elif isinstance(t, Const) and isinstance(rhs, Const):
                if rhs.value == 0:
                    self.fail("a nonzero literal denominator")
                t = Const(t.value / rhs.value)
            else:
                t = Mul(t, Inv(rhs))
        return t

    def factor(self) -> Term:
        tok = self.peek()
        if tok.text == "-" and tok.kind == "op":
            self.advance()
            # minus directly before a numeric literal folds into the constant
            # (unless a power follows, which binds tighter)
            nxt = self.peek()
            if nxt.kind == "num" and self.peek(1).text != "^":
                self.advance()
                return Const(-Fraction(int(nxt.text)))
            return Neg(self.factor())
        return self.power()

    def power(self) -> Term:
        base = self.atom()
        if self.peek().text == "^":
            self.advance()
            self.expect("(")
            q = self.rational()
            self.expect(")")
            return Pow(base, q)
        return base

    def rational(self) -> Fraction:
        negative = False
        if self.peek().text == "-":
            self.advance()
            negative = True
        tok = self.peek()
        if tok.kind != "num":
            self.fail("a rational literal")
        self.advance()
        num = int(tok.text)
        den = 1
        if self.peek().text == "/":
            self.advance()
            dtok = self.peek()
            if dtok.kind != "num":
                self.fail("a denominator")
            self.advance()
            den = int(dtok.text)
            if den == 0:
                raise ParseError(dtok.span, "a nonzero denominator", dtok.text)
        value = Fraction(num, den)
        return -value if negative else value

    def atom(self) -> Term:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(Fraction(int(tok.text)))
        if tok.text == "(":
            self.advance()
            t = self.expr()
            self.expect(")")
            return t
        if tok.kind == "ident":
            return self.ident()
        self.fail("a term")
        raise AssertionError  # unreachable

    def ident(self) -> Term:
        tok = self.advance()
        name = tok.text
        if name == "x":
            return Var(self.ctx.x_index)
        m = re.fullmatch(r"t(\d+)", name)
        if m:
            k = int(m.group(1))
            if not 1 <= k <= self.ctx.n:
                raise ParseError(
                    tok.span, f"a variable t1..t{self.ctx.n} or x", name
                )
            return Var(k - 1)
        if name == "piece":
            return self.piece()
        if name in _FUNCTIONS or name in self.series:
            return self.call(name, tok)
        raise ParseError(tok.span, "a variable or function", name)

    def call(self, name: str, tok: _Token) -> Term:
        self.expect("(")
        if name == "series":
            stok = self.peek()
            if stok.kind != "ident":
                self.fail("a series name")
            self.advance()
            sd = self.series.get(stok.text)
            if sd is None:
                raise ParseError(stok.span, "a known series name", stok.text)
            self.expect(";")
            args = [self.expr()]
            while self.peek().text == ",":
                self.advance()
                args.append(self.expr())
            self.expect(")")
            if len(args) != sd.arity:
                raise ParseError(
                    stok.span, f"{sd.arity} series arguments", f"{len(args)}"
                )
            return NamedSeries(sd, tuple(args))
        if name in self.series and name not in _FUNCTIONS:
            sd = self.series[name]
            args = [self.expr()]
            while self.peek().text == ",":
                self.advance()
                args.append(self.expr())
            self.expect(")")
            if len(args) != sd.arity:
                raise ParseError(tok.span, f"{sd.arity} series arguments", f"{len(args)}")
            return NamedSeries(sd, tuple(args))
        if name == "root":
            dtok = self.peek()
            if dtok.kind != "num":
                self.fail("a root degree")
            self.advance()
            degree = int(dtok.text)
            if degree < 2:
                raise ParseError(dtok.span, "a degree >= 2", dtok.text)
            self.expect(",")
            arg = self.expr()
            self.expect(")")
            return Root(degree, arg)
        if name in ("logstar", "expstar"):
            lam = self.rational()
            self.expect(",")
            arg = self.expr()
            self.expect(")")
            if name == "logstar":
                if lam < 1:
                    raise ParseError(tok.span, "a window parameter >= 1", str(lam))
                return TruncLog(lam, arg)
            if lam <= 0:
                raise ParseError(tok.span, "a positive window parameter", str(lam))
            return TruncExp(lam, arg)
        if name in ("min", "max"):
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            return Min(a, b) if name == "min" else Max(a, b)
        arg = self.expr()
        self.expect(")")
        return {"abs": Abs, "log": Log, "exp": Exp, "inv": Inv}[name](arg)

    def piece(self) -> Term:
        self.expect("{")
        branches = []
        while True:
            guard = [self.relation()]
            while self.peek().text == "&":
                self.advance()
                guard.append(self.relation())
            self.expect("->")
            value = self.expr()
            branches.append((tuple(guard), value))
            if self.peek().text == ";":
                self.advance()
                if self.peek().text == "}":
                    break
                continue
            break
        self.expect("}")
        return Guarded(tuple(branches))

    def relation(self) -> Atom:
        lhs = self.expr()
        tok = self.peek()
        if tok.text not in ("<", "<=", ">", ">=", "==", "!="):
            self.fail("a comparison operator")
        self.advance()
        rhs = self.expr()
        return Atom(tok.text, lhs, rhs)


def parse_term(
    text: str,
    ctx: VarContext,
    series: Optional[dict[str, SeriesDef]] = None,
) -> Term:
    """Parse `text` into a term over `ctx`.  Raises ParseError."""
    return _Parser(text, ctx, series).parse()


def parse_rational(text: str) -> Fraction:
    """Parse a standalone rational literal `p`, `-p`, `p/q` or `-p/q`."""
    m = re.fullmatch(r"\s*(-?\d+)\s*(?:/\s*(\d+)\s*)?", text)
    if m is None or (m.group(2) is not None and int(m.group(2)) == 0):
        span = SourceSpan(0, len(text), 1, 1)
        raise ParseError(span, "a rational literal", repr(text))
    return Fraction(int(m.group(1)), int(m.group(2)) if m.group(2) else 1)


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


# --- printing ---------------------------------------------------------------

_LVL_ADD, _LVL_MUL, _LVL_UNARY, _LVL_POW, _LVL_ATOM = 1, 2, 3, 4, 5


def _const_str(v: Fraction) -> tuple[str, int]:
    if v.denominator == 1:
        s = str(v.numerator)
        return s, (_LVL_ATOM if v >= 0 else _LVL_UNARY)
    return f"{v.numerator}/{v.denominator}", _LVL_MUL


def _print(term: Term, ctx: VarContext, context_level: int) -> str:
    text, level = _render(term, ctx)
    if level < context_level:
        return f"({text})"
    return text


def _render(term: Term, ctx: VarContext) -> tuple[str, int]:
    match term:
        case Const(v):
            return _const_str(v)
        case Var(i):
            return ctx.var_name(i), _LVL_ATOM
        case Add(l, Neg(r)):
            return (
                f"{_print(l, ctx, _LVL_ADD)} - {_print(r, ctx, _LVL_MUL)}",
                _LVL_ADD,
            )
        case Add(l, r):
            return (
                f"{_print(l, ctx, _LVL_ADD)} + {_print(r, ctx, _LVL_MUL)}",
                _LVL_ADD,
            )
        case Mul(l, r):
            return (
                f"{_print(l, ctx, _LVL_MUL)}*{_print(r, ctx, _LVL_UNARY)}",
                _LVL_MUL,
            )
        case Neg(a):
            return f"-({_print(a, ctx, _LVL_ADD)})", _LVL_UNARY
        case Inv(a):
            return f"inv({_print(a, ctx, _LVL_ADD)})", _LVL_ATOM
        case Abs(a):
            return f"abs({_print(a, ctx, _LVL_ADD)})", _LVL_ATOM
        case Log(a):
            return f"log({_print(a, ctx, _LVL_ADD)})", _LVL_ATOM
        case Exp(a):
            return f"exp({_print(a, ctx, _LVL_ADD)})", _LVL_ATOM
        case Root(k, a):
            return f"root({k}, {_print(a, ctx, _LVL_ADD)})", _LVL_ATOM
        case Pow(base, q):
            return (
                f"{_print(base, ctx, _LVL_ATOM)}^({format_rational(q)})",
                _LVL_POW,
            )
        case Min(a, b):
            return (
                f"min({_print(a, ctx, _LVL_ADD)}, {_print(b, ctx, _LVL_ADD)})",
                _LVL_ATOM,
            )
        case Max(a, b):
            return (
                f"max({_print(a, ctx, _LVL_ADD)}, {_print(b, ctx, _LVL_ADD)})",
                _LVL_ATOM,
            )
        case TruncLog(lam, a):
            return (
                f"logstar({format_rational(lam)}, {_print(a, ctx, _LVL_ADD)})",
                _LVL_ATOM,
            )
        case TruncExp(lam, a):
            return (
                f"expstar({format_rational(lam)}, {_print(a, ctx, _LVL_ADD)})",
                _LVL_ATOM,
            )
        case NamedSeries(sd, args):
            inner = ", ".join(_print(a, ctx, _LVL_ADD) for a in args)
            return f"series({sd.name}; {inner})", _LVL_ATOM
        case Guarded(branches):
            parts = []
            for guard, value in branches:
                conds = " & ".join(
                    f"{_print(a.left, ctx, _LVL_ADD)} {a.op} "
                    f"{_print(a.right, ctx, _LVL_ADD)}"
                    for a in guard
                )
                parts.append(f"{conds} -> {_print(value, ctx, _LVL_ADD)}")
            return "piece { " + " ; ".join(parts) + " }", _LVL_ATOM
    raise TypeError(f"unknown term node {term!r}")


def print_term(term: Term, ctx: VarContext) -> str:
    """Render a term; parse_term(print_term(t)) is structurally equal to t."""
    return _print(term, ctx, _LVL_ADD)
