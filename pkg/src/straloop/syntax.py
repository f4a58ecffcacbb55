"""Tokenizer and recursive-descent parser for formulas and ST-RA specs.

Grammar (EBNF)::

    spec     = formula "U" "[" number "," number "]" formula
    formula  = conj { "|" conj }
    conj     = unary { "&" unary }
    unary    = "!" unary | "(" formula ")" | "true" | "false" | chain
    chain    = linexpr relop linexpr { relop linexpr }
    relop    = "<=" | "<" | ">=" | ">" | "=" | "=="
    linexpr  = [ "+" | "-" ] term { ("+" | "-") term }
    term     = number [ "*" ident ] | ident [ "*" number ]
    number   = digits [ "." digits ] [ "/" digits ]

Chained comparisons expand to conjunctions, so ``0 <= h <= 4`` is
``h >= 0 & h <= 4``.  Numbers are exact; ``2.5`` is ``5/2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .ratset import FALSE, TRUE, Formula, LinExpr, Atom, conj, disj, neg


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message, self.line, self.col = message, line, col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class NestedTemporalError(ParseError):
    pass


class NonlinearError(ParseError):
    pass


KEYWORDS = {"U", "true", "false"}

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<num>\d+(?:\.\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|[<>=()\[\],&|!+\-*/])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line0: int = 1, col0: int = 1) -> list[Token]:
    out: list[Token] = []
    pos, line, col = 0, line0, col0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            ch = text[pos]
            if ch == "." and out and out[-1].kind == "num":
                raise ParseError("only finite decimal expansions are accepted", line, col)
            raise ParseError(f"unexpected character {ch!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            if kind == "num" and m.end() < len(text) and text[m.end()] in "(.":
                raise ParseError("repeating or malformed decimal literal", line, col)
            out.append(Token("kw" if tok in KEYWORDS else kind, tok, line, col))
        nl = tok.count("\n")
        if nl:
            line += nl
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


class _Parser:
    def __init__(self, tokens: list[Token], allowed: frozenset[str] | None):
        self.toks = tokens
        self.i = 0
        self.allowed = allowed

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def fail(self, msg: str, tok: Token | None = None):
        tok = tok or self.cur
        raise ParseError(msg, tok.line, tok.col)

    def take(self, text: str | None = None, kind: str | None = None) -> Token:
        tok = self.cur
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = text or kind
            got = tok.text or "end of input"
            self.fail(f"expected {want!r}, got {got!r}")
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.cur.text == text and self.cur.kind != "ident":
            self.i += 1
            return True
        return False

    # numbers and expressions

    def number(self) -> Fraction:
        tok = self.take(kind="num")
        val = Fraction(tok.text)
        if self.cur.text == "/" and self.toks[self.i + 1].kind == "num":
            self.i += 1
            den_tok = self.take(kind="num")
            den = Fraction(den_tok.text)
            if den == 0:
                self.fail("division by zero", den_tok)
            val /= den
        return val

    def signed_number(self) -> Fraction:
        sign = -1 if self.accept("-") else 1
        return sign * self.number()

    def ident(self) -> str:
        tok = self.take(kind="ident")
        if self.allowed is not None and tok.text not in self.allowed:
            self.fail(f"unknown variable {tok.text!r}", tok)
        return tok.text

    def term(self) -> LinExpr:
        if self.cur.kind == "num":
            c = self.number()
            if self.accept("*"):
                if self.cur.kind != "ident":
                    self.fail("expected a variable after '*'")
                v = self.ident()
                self._no_product()
                return LinExpr.var(v, c)
            if self.cur.kind == "ident":
                self.fail("missing '*' between coefficient and variable")
            return LinExpr.constant(c)
        if self.cur.kind == "ident":
            v = self.ident()
            if self.accept("*"):
                if self.cur.kind == "ident":
                    raise NonlinearError("nonlinear term", self.cur.line, self.cur.col)
                return LinExpr.var(v, self.number())
            return LinExpr.var(v)
        self.fail(f"expected a term, got {self.cur.text or 'end of input'!r}")

    def _no_product(self):
        if self.cur.text == "*":
            raise NonlinearError("nonlinear term", self.cur.line, self.cur.col)

    def linexpr(self) -> LinExpr:
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        e = self.term() * sign
        while self.cur.text in ("+", "-"):
            s = 1 if self.take().text == "+" else -1
            e = e + self.term() * s
        return e

    # boolean layer

    def formula(self) -> Formula:
        parts = [self.conj()]
        while self.accept("|"):
            parts.append(self.conj())
        return disj(*parts)

    def conj(self) -> Formula:
        parts = [self.unary()]
        while self.accept("&"):
            parts.append(self.unary())
        return conj(*parts)

    def unary(self) -> Formula:
        if self.accept("!"):
            return neg(self.unary())
        if self.cur.text == "(" and self.cur.kind == "op":
            self.i += 1
            f = self.formula()
            self.take(")")
            return f
        if self.cur.kind == "kw" and self.cur.text in ("true", "false"):
            return TRUE if self.take().text == "true" else FALSE
        return self.chain()

    def chain(self) -> Formula:
        first = self.cur
        lhs = self.linexpr()
        rels = []
        while self.cur.text in ("<=", "<", ">=", ">", "=", "=="):
            op = self.take().text
            rhs = self.linexpr()
            rels.append(_relation(lhs, op, rhs))
            lhs = rhs
        if not rels:
            self.fail("expected a comparison", first if self.cur.kind == "eof" else None)
        return conj(*rels)


def _relation(lhs: LinExpr, op: str, rhs: LinExpr) -> Formula:
    if op == ">=":
        return Atom.make(lhs - rhs, False)
    if op == ">":
        return Atom.make(lhs - rhs, True)
    if op == "<=":
        return Atom.make(rhs - lhs, False)
    if op == "<":
        return Atom.make(rhs - lhs, True)
    return conj(Atom.make(lhs - rhs, False), Atom.make(rhs - lhs, False))


def _check_temporal(tokens: list[Token], allow_top: bool) -> int | None:
    depth = 0
    found = None
    for k, tok in enumerate(tokens):
        if tok.text == "(":
            depth += 1
        elif tok.text == ")":
            depth -= 1
        elif tok.kind == "kw" and tok.text == "U":
            if not allow_top or depth > 0 or found is not None:
                raise NestedTemporalError("nested temporal operator", tok.line, tok.col)
            found = k
    return found


def parse_formula(text: str, variables=None, line: int = 1, col: int = 1) -> Formula:
    """Parse a quantifier-free formula (no until)."""
    toks = tokenize(text, line, col)
    if _check_temporal(toks, allow_top=False) is not None:
        raise NestedTemporalError("temporal operator not allowed here")
    p = _Parser(toks, frozenset(variables) if variables is not None else None)
    f = p.formula()
    if p.cur.kind != "eof":
        p.fail(f"unexpected {p.cur.text!r}")
    return f


def parse_spec(text: str, variables=None, line: int = 1, col: int = 1):
    """Parse ``phi1 U[l,u] phi2``; returns ``(phi1, phi2, l, u)``."""
    toks = tokenize(text, line, col)
    k = _check_temporal(toks, allow_top=True)
    if k is None:
        raise ParseError("expected an until formula 'phi1 U[l,u] phi2'", line, col)
    p = _Parser(toks, frozenset(variables) if variables is not None else None)
    phi1 = p.formula()
    if p.i != k:
        p.fail(f"unexpected {p.cur.text!r}")
    p.take("U")
    p.take("[")
    lo = p.signed_number()
    p.take(",")
    hi = p.signed_number()
    close = p.take("]")
    if lo < 0 or hi < lo:
        raise ParseError(f"bad interval [{lo},{hi}]: need 0 <= l <= u", close.line, close.col)
    phi2 = p.formula()
    if p.cur.kind != "eof":
        p.fail(f"unexpected {p.cur.text!r}")
    return phi1, phi2, lo, hi
