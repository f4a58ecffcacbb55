"""Quantifier elimination for linear arithmetic over the ordered rationals.

The default method is virtual substitution: for ``exists x. F`` the
candidate witnesses are ``-inf``, every weak lower bound ``r`` of ``x`` in
``F`` and ``r + eps`` for every strict lower bound.  Both the infinitesimal
and ``-inf`` are resolved symbolically while substituting into an atom, so
the result is exact.  ``method="fm"`` uses Fourier-Motzkin per DNF conjunct.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .ratset import (
    FALSE,
    TRUE,
    Atom,
    Cube,
    Formula,
    LinExpr,
    atoms,
    conj,
    disj,
    dnf,
    from_cubes,
    ge,
    le,
    map_atoms,
    neg,
    nnf,
    normalize,
    prune,
)


class Quantifier(enum.Enum):
    EXISTS = "exists"
    FORALL = "forall"


@dataclass(frozen=True)
class QuantBlock:
    """``Q var in [lower, upper]: body``; missing bounds are unbounded."""

    quantifier: Quantifier
    var: str
    body: Formula
    lower: Optional[LinExpr] = None
    upper: Optional[LinExpr] = None

    def __post_init__(self):
        for b in (self.lower, self.upper):
            if b is not None and self.var in b.variables:
                raise ValueError(f"bound of {self.var} mentions {self.var}")

    def bounds(self) -> Formula:
        parts = []
        if self.lower is not None:
            parts.append(ge(LinExpr.var(self.var), self.lower))
        if self.upper is not None:
            parts.append(le(LinExpr.var(self.var), self.upper))
        return conj(*parts)


# test points: ("-inf",), or (root expression, eps flag)
_NEG_INF = None


def _vs_atom(a: Atom, var: str, point) -> Formula:
    c = a.coeff(var)
    if c == 0:
        return a
    if point is _NEG_INF:
        return FALSE if c > 0 else TRUE
    root, eps = point
    rest = LinExpr(tuple((v, Fraction(k)) for v, k in a.coeffs if v != var), Fraction(a.const))
    val = rest + root * c
    if not eps:
        return Atom.make(val, a.strict)
    # c*(r + eps) + rest: sign decided by c*r + rest, ties broken by sign of c
    return Atom.make(val, c < 0)


def _test_points(f: Formula, var: str):
    pts = [_NEG_INF]
    seen = set()
    for a in sorted(atoms(f), key=Atom.sort_key):
        c = a.coeff(var)
        if c <= 0:
            continue
        rest = LinExpr(tuple((v, Fraction(k)) for v, k in a.coeffs if v != var), Fraction(a.const))
        key = (rest * Fraction(-1, c), a.strict)
        if key not in seen:
            seen.add(key)
            pts.append(key)
    return pts


def exists_vs(f: Formula, var: str) -> Formula:
    f = nnf(f)
    pieces = []
    for pt in _test_points(f, var):
        pieces.append(map_atoms(f, lambda a, pt=pt: _vs_atom(a, var, pt)))
    return normalize(disj(*pieces))


def fm_cube(cube: Cube, var: str) -> Cube:
    lows, ups, rest = [], [], []
    for a in cube:
        c = a.coeff(var)
        (lows if c > 0 else ups if c < 0 else rest).append(a)
    out = list(rest)
    for lo in lows:
        a = lo.coeff(var)
        for up in ups:
            b = -up.coeff(var)
            e = lo.expr * b + up.expr * a
            r = Atom.make(e, lo.strict or up.strict)
            if r == FALSE:
                return frozenset([Atom((), -1, False)])
            if r != TRUE:
                out.append(r)
    return frozenset(out)


def exists_fm(f: Formula, var: str) -> Formula:
    cubes = []
    for c in dnf(f):
        proj = fm_cube(c, var)
        if any(not a.coeffs for a in proj):
            continue
        cubes.append(proj)
    return from_cubes(prune(cubes))


def exists(var: str, body: Formula, lower=None, upper=None, method: str = "vs") -> Formula:
    return eliminate_exists(QuantBlock(Quantifier.EXISTS, var, body, lower, upper), method)


def forall(var: str, body: Formula, lower=None, upper=None, method: str = "vs") -> Formula:
    return eliminate_forall(QuantBlock(Quantifier.FORALL, var, body, lower, upper), method)


def eliminate_exists(block: QuantBlock, method: str = "vs") -> Formula:
    if block.quantifier is not Quantifier.EXISTS:
        raise ValueError("expected an existential block")
    body = conj(block.bounds(), block.body)
    if method == "vs":
        return exists_vs(body, block.var)
    if method == "fm":
        return exists_fm(body, block.var)
    raise ValueError(f"unknown elimination method {method!r}")


def eliminate_forall(block: QuantBlock, method: str = "vs") -> Formula:
    """``forall v in B: F``  as  ``not exists v in B: not F``."""
    if block.quantifier is not Quantifier.FORALL:
        raise ValueError("expected a universal block")
    inner = QuantBlock(Quantifier.EXISTS, block.var, neg(block.body), block.lower, block.upper)
    return normalize(neg(eliminate_exists(inner, method)))
