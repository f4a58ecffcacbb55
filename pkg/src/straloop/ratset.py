"""Exact linear-arithmetic set algebra over state variables and time ``t``.

A set is a quantifier-free formula built from atoms ``e >= 0`` / ``e > 0``
with ``e`` affine.  Atoms are kept canonical (coprime integer coefficients),
so structurally equal atoms are semantically equal.  Everything semantic
(emptiness, inclusion, equality) goes through a DNF whose conjuncts are
pruned with exact rational feasibility checks.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence, Union

from . import feasibility

Rat = Fraction
TIME = "t"
AUX_PREFIX = "__"

Number = Union[int, Fraction, str]


def rat(value: Number) -> Fraction:
    """Exact rational from an int, Fraction or a ``p/q`` / finite-decimal string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"refusing to convert {type(value).__name__} to a rational")


def is_aux(name: str) -> bool:
    return name.startswith(AUX_PREFIX)


class SubstitutionError(ValueError):
    pass


# --- affine expressions ------------------------------------------------------

@dataclass(frozen=True, slots=True)
class LinExpr:
    terms: tuple[tuple[str, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def build(coeffs: Mapping[str, Number] | Iterable[tuple[str, Number]] = (), const: Number = 0) -> "LinExpr":
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[str, Fraction] = {}
        for v, c in items:
            acc[v] = acc.get(v, Fraction(0)) + rat(c)
        return LinExpr(tuple(sorted((v, c) for v, c in acc.items() if c)), rat(const))

    @staticmethod
    def var(name: str, coeff: Number = 1) -> "LinExpr":
        return LinExpr.build({name: coeff})

    @staticmethod
    def constant(c: Number) -> "LinExpr":
        return LinExpr((), rat(c))

    def coeff(self, name: str) -> Fraction:
        for v, c in self.terms:
            if v == name:
                return c
        return Fraction(0)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.terms)

    def __add__(self, other: "LinExpr | Number") -> "LinExpr":
        if not isinstance(other, LinExpr):
            return LinExpr(self.terms, self.const + rat(other))
        return LinExpr.build(self.terms + other.terms, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return LinExpr(tuple((v, -c) for v, c in self.terms), -self.const)

    def __sub__(self, other: "LinExpr | Number") -> "LinExpr":
        return self + (-other if isinstance(other, LinExpr) else -rat(other))

    def __rsub__(self, other: Number) -> "LinExpr":
        return (-self) + other

    def __mul__(self, k: Number) -> "LinExpr":
        k = rat(k)
        if not k:
            return LinExpr()
        return LinExpr(tuple((v, c * k) for v, c in self.terms), self.const * k)

    __rmul__ = __mul__

    def substitute(self, mapping: Mapping[str, "LinExpr"]) -> "LinExpr":
        acc: list[tuple[str, Fraction]] = []
        const = self.const
        for v, c in self.terms:
            image = mapping.get(v)
            if image is None:
                acc.append((v, c))
            else:
                acc.extend((w, c * d) for w, d in image.terms)
                const += c * image.const
        return LinExpr.build(acc, const)

    def evaluate(self, env: Mapping[str, Number]) -> Fraction:
        return self.const + sum((c * rat(env[v]) for v, c in self.terms), Fraction(0))

    def __str__(self) -> str:
        return _fmt_linear(self.terms, self.const)


def _fmt_num(x: Fraction) -> str:
    return str(x)


def _fmt_linear(terms, const) -> str:
    parts: list[str] = []
    for v, c in terms:
        mag = abs(c)
        body = v if mag == 1 else f"{_fmt_num(Fraction(mag))}*{v}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    if const or not parts:
        if not parts:
            parts.append(_fmt_num(Fraction(const)))
        else:
            parts.append(f"+ {_fmt_num(Fraction(const))}" if const > 0 else f"- {_fmt_num(Fraction(-const))}")
    return " ".join(parts)


# --- formulas ----------------------------------------------------------------

class Formula:
    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return conj(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return disj(self, other)

    def __invert__(self) -> "Formula":
        return neg(self)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    """``sum(c*v) + const > 0`` if strict else ``>= 0``; integer, coprime, canonical."""

    coeffs: tuple[tuple[str, int], ...]
    const: int
    strict: bool

    @staticmethod
    def make(expr: LinExpr, strict: bool = False) -> Formula:
        """Canonical atom for ``expr >= 0`` (or ``> 0``); constant atoms fold."""
        if not expr.terms:
            holds = expr.const > 0 or (expr.const == 0 and not strict)
            return TRUE if holds else FALSE
        den = lcm(*(c.denominator for _, c in expr.terms), expr.const.denominator)
        nums = [int(c * den) for _, c in expr.terms]
        k = int(expr.const * den)
        g = gcd(k, *nums)
        return Atom(tuple((v, n // g) for (v, _), n in zip(expr.terms, nums)), k // g, strict)

    @property
    def expr(self) -> LinExpr:
        return LinExpr(tuple((v, Fraction(c)) for v, c in self.coeffs), Fraction(self.const))

    @property
    def row(self) -> feasibility.Row:
        return self.coeffs, self.const, self.strict

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def coeff(self, name: str) -> int:
        for v, c in self.coeffs:
            if v == name:
                return c
        return 0

    def negate(self) -> "Atom":
        return Atom(tuple((v, -c) for v, c in self.coeffs), -self.const, not self.strict)

    def holds(self, env: Mapping[str, Number]) -> bool:
        val = self.const + sum(c * rat(env[v]) for v, c in self.coeffs)
        return val > 0 if self.strict else val >= 0

    def sort_key(self):
        return (tuple(v for v, _ in self.coeffs), tuple(-c for _, c in self.coeffs), self.const, self.strict)


@dataclass(frozen=True, slots=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class Not(Formula):
    arg: Formula


def ge(lhs: LinExpr | Number, rhs: LinExpr | Number = 0) -> Formula:
    return Atom.make(_lin(lhs) - _lin(rhs), False)


def gt(lhs: LinExpr | Number, rhs: LinExpr | Number = 0) -> Formula:
    return Atom.make(_lin(lhs) - _lin(rhs), True)


def le(lhs, rhs=0) -> Formula:
    return ge(rhs, lhs)


def lt(lhs, rhs=0) -> Formula:
    return gt(rhs, lhs)


def eq(lhs, rhs=0) -> Formula:
    return conj(ge(lhs, rhs), le(lhs, rhs))


def between(expr, lo, hi) -> Formula:
    return conj(ge(expr, lo), le(expr, hi))


def _lin(x) -> LinExpr:
    if isinstance(x, LinExpr):
        return x
    if isinstance(x, str) and x.isidentifier():
        return LinExpr.var(x)
    return LinExpr.constant(rat(x))


def conj(*args: Formula) -> Formula:
    out: list[Formula] = []
    seen = set()
    for a in args:
        parts = a.args if isinstance(a, And) else (a,)
        for p in parts:
            if p == FALSE:
                return FALSE
            if p == TRUE or p in seen:
                continue
            seen.add(p)
            out.append(p)
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(*args: Formula) -> Formula:
    out: list[Formula] = []
    seen = set()
    for a in args:
        parts = a.args if isinstance(a, Or) else (a,)
        for p in parts:
            if p == TRUE:
                return TRUE
            if p == FALSE or p in seen:
                continue
            seen.add(p)
            out.append(p)
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    if isinstance(f, Atom):
        return f.negate()
    if isinstance(f, Not):
        return f.arg
    return Not(f)


class Combine(enum.Enum):
    AND = "and"
    OR = "or"
    NOT = "not"
    DIFF = "diff"


def combine(kind: Combine | str, operands: Sequence[Formula]) -> Formula:
    kind = Combine(kind.lower()) if isinstance(kind, str) else kind
    if kind is Combine.AND:
        return conj(*operands)
    if kind is Combine.OR:
        return disj(*operands)
    if kind is Combine.NOT:
        (f,) = operands
        return neg(f)
    a, b = operands
    return conj(a, neg(b))


def nnf(f: Formula, positive: bool = True) -> Formula:
    """Push negations into atoms; the result has no ``Not`` nodes."""
    if isinstance(f, Const):
        return f if positive else neg(f)
    if isinstance(f, Atom):
        return f if positive else f.negate()
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    kids = [nnf(a, positive) for a in f.args]
    if isinstance(f, And) == positive:
        return conj(*kids)
    return disj(*kids)


def atoms(f: Formula) -> set[Atom]:
    if isinstance(f, Atom):
        return {f}
    if isinstance(f, Const):
        return set()
    if isinstance(f, Not):
        return atoms(f.arg)
    out: set[Atom] = set()
    for a in f.args:
        out |= atoms(a)
    return out


def variables(f: Formula) -> frozenset[str]:
    out: set[str] = set()
    for a in atoms(f):
        out |= a.variables
    return frozenset(out)


def holds(f: Formula, env: Mapping[str, Number]) -> bool:
    """Membership of a rational point (missing variables raise KeyError)."""
    if isinstance(f, Atom):
        return f.holds(env)
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return not holds(f.arg, env)
    if isinstance(f, And):
        return all(holds(a, env) for a in f.args)
    return any(holds(a, env) for a in f.args)


def map_atoms(f: Formula, fn) -> Formula:
    """Rebuild ``f`` with every atom replaced by ``fn(atom)`` (a Formula)."""
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return neg(map_atoms(f.arg, fn))
    kids = [map_atoms(a, fn) for a in f.args]
    return conj(*kids) if isinstance(f, And) else disj(*kids)


def substitute_affine(f: Formula, mapping: Mapping[str, LinExpr | Number]) -> Formula:
    """Simultaneous affine substitution ``v -> mapping[v]`` in every atom."""
    mp = {v: _lin(e) for v, e in mapping.items()}
    for v, e in mp.items():
        if is_aux(v) and v in e.variables:
            raise SubstitutionError(f"auxiliary variable {v} substituted by an expression containing itself")
    if not mp:
        return f
    cache: dict[Atom, Formula] = {}

    def sub(a: Atom) -> Formula:
        r = cache.get(a)
        if r is None:
            if a.variables.isdisjoint(mp):
                r = a
            else:
                r = Atom.make(a.expr.substitute(mp), a.strict)
            cache[a] = r
        return r

    return map_atoms(f, sub)


# --- conjunct (cube) algebra ------------------------------------------------

Cube = frozenset  # frozenset[Atom]


@lru_cache(maxsize=1 << 18)
def cube_feasible(cube: Cube) -> bool:
    return feasibility.feasible([a.row for a in cube])


@lru_cache(maxsize=1 << 17)
def simplify_cube(cube: Cube) -> Cube | None:
    """Tightest, irredundant equivalent of a conjunction, or None if empty."""
    best = feasibility.tighten(a.row for a in cube)
    if best is None:
        return None
    kept = sorted((Atom(*r) for _, _, r in best.values()), key=Atom.sort_key)
    if len(kept) < 2:
        return frozenset(kept)
    if not cube_feasible(frozenset(kept)):
        return None
    if all(len(a.coeffs) == 1 for a in kept):
        return frozenset(kept)
    i = 0
    while i < len(kept):
        a = kept[i]
        rest = kept[:i] + kept[i + 1:]
        if not cube_feasible(frozenset(rest + [a.negate()])):
            kept = rest
        else:
            i += 1
    return frozenset(kept)


def cube_implies(a: Cube, b: Cube) -> bool:
    """Semantic inclusion of conjunction ``a`` in conjunction ``b`` (a feasible)."""
    for atom in b:
        if atom in a:
            continue
        if cube_feasible(a | {atom.negate()}):
            return False
    return True


def _cube_key(c: Cube):
    return tuple(sorted(a.sort_key() for a in c))


def prune(cubes: Iterable[Cube]) -> list[Cube]:
    """Simplify, drop empty and subsumed conjuncts; deterministic order."""
    uniq: dict[Cube, None] = {}
    for c in cubes:
        s = simplify_cube(c)
        if s is not None:
            if not s:
                return [frozenset()]
            uniq.setdefault(s, None)
    cs = sorted(uniq, key=lambda c: (len(c), _cube_key(c)))
    kept: list[Cube] = []
    for c in cs:
        if any(k <= c for k in kept):
            continue
        kept.append(c)
    if len(kept) > 1:
        out: list[Cube] = []
        for i, c in enumerate(kept):
            if any(j != i and cube_implies(c, d) and (j < i or not cube_implies(d, c)) for j, d in enumerate(kept)):
                continue
            out.append(c)
        kept = out
    return sorted(kept, key=_cube_key)


def _product(left: list[Cube], right: list[Cube]) -> list[Cube]:
    out: list[Cube] = []
    for a in left:
        for b in right:
            c = a | b
            if cube_feasible(c):
                out.append(c)
    return prune(out)


@lru_cache(maxsize=1 << 14)
def _dnf_of_nnf(f: Formula) -> tuple[Cube, ...]:
    if isinstance(f, Const):
        return (frozenset(),) if f.value else ()
    if isinstance(f, Atom):
        return (frozenset([f]),)
    if isinstance(f, Or):
        acc: list[Cube] = []
        for a in f.args:
            acc.extend(_dnf_of_nnf(a))
        return tuple(prune(acc))
    # And: multiply out, smallest factors first
    kids = sorted((_dnf_of_nnf(a) for a in f.args), key=len)
    cur: list[Cube] = [frozenset()]
    for k in kids:
        cur = _product(cur, list(k))
        if not cur:
            break
    return tuple(cur)


def dnf(f: Formula) -> list[Cube]:
    """Pruned DNF of ``f`` as a list of irredundant feasible conjuncts."""
    return list(_dnf_of_nnf(nnf(f)))


def from_cubes(cubes: Iterable[Cube]) -> Formula:
    parts = []
    for c in cubes:
        parts.append(conj(*sorted(c, key=Atom.sort_key)))
    return disj(*parts)


def normalize(f: Formula, merge: bool = True) -> Formula:
    """Canonical DNF formula equivalent to ``f``.

    With ``merge``, pairs of conjuncts whose union is convex are replaced by
    that union (envelope test), which keeps iterated sets small.
    """
    cubes = dnf(f)
    if merge and len(cubes) > 1:
        cubes = merge_cubes(cubes)
    return from_cubes(cubes)


def _envelope(a: Cube, b: Cube) -> Cube:
    keep = [x for x in a if x in b or cube_implies(b, frozenset([x]))]
    keep += [y for y in b if y not in a and cube_implies(a, frozenset([y]))]
    return frozenset(keep)


def merge_cubes(cubes: Sequence[Cube]) -> list[Cube]:
    """Greedily merge conjunct pairs whose union is a single conjunct."""
    cur = list(cubes)
    changed = True
    while changed and len(cur) > 1:
        changed = False
        for i in range(len(cur)):
            for j in range(i + 1, len(cur)):
                env = _envelope(cur[i], cur[j])
                if _cube_minus(env, [cur[i], cur[j]]):
                    rest = [c for k, c in enumerate(cur) if k not in (i, j)]
                    cur = prune(rest + [env])
                    changed = True
                    break
            if changed:
                break
    return cur


def complement_cubes(cubes: Sequence[Cube]) -> list[Cube]:
    """DNF of the complement of a union of conjunctions."""
    result: list[Cube] = [frozenset()]
    for c in cubes:
        nxt: list[Cube] = []
        for r in result:
            if not cube_feasible(r | c):
                nxt.append(r)
                continue
            for a in sorted(c, key=Atom.sort_key):
                if a in r:
                    continue
                piece = r | {a.negate()}
                if cube_feasible(piece):
                    nxt.append(piece)
        result = prune(nxt)
        if not result:
            break
    return result


def complement(f: Formula) -> Formula:
    return from_cubes(complement_cubes(dnf(f)))


def is_empty(f: Formula) -> bool:
    return not dnf(f)


def _cube_minus(piece: Cube, cubes: Sequence[Cube]) -> bool:
    """True iff ``piece`` is covered by the union of ``cubes``."""
    pieces = [piece]
    for c in cubes:
        nxt: list[Cube] = []
        for p in pieces:
            if not cube_feasible(p | c):
                nxt.append(p)
                continue
            for a in sorted(c, key=Atom.sort_key):
                if a in p:
                    continue
                q = p | {a.negate()}
                if cube_feasible(q):
                    nxt.append(q)
        pieces = nxt
        if not pieces:
            return True
    return not pieces


def includes(a: Formula, b: Formula) -> bool:
    """True iff ``b`` implies ``a`` (every point of b lies in a)."""
    da = dnf(a)
    db = dnf(b)
    if not db:
        return True
    if not da:
        return False
    return all(_cube_minus(p, da) for p in db)


def equivalent(a: Formula, b: Formula) -> bool:
    return includes(a, b) and includes(b, a)


def project_point(f: Formula, env: Mapping[str, Number]) -> Formula:
    """Fix some variables to rational values."""
    return substitute_affine(f, {v: LinExpr.constant(rat(x)) for v, x in env.items()})


def size(f: Formula) -> tuple[int, int]:
    """(number of conjuncts, number of atoms) of the pruned DNF."""
    cs = dnf(f)
    return len(cs), sum(len(c) for c in cs)


# --- text form ---------------------------------------------------------------

def atom_text(a: Atom) -> str:
    op = ">" if a.strict else ">="
    if len(a.coeffs) == 1:
        (v, c), = a.coeffs
        bound = Fraction(-a.const, c)
        if c > 0:
            return f"{v} {op} {_fmt_num(bound)}"
        return f"{v} {'<' if a.strict else '<='} {_fmt_num(bound)}"
    return f"{_fmt_linear(a.coeffs, a.const)} {op} 0"


def to_text(f: Formula) -> str:
    """Canonical text; parsing it back yields a structurally equal formula."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return atom_text(f)
    if isinstance(f, Not):
        return f"!({to_text(f.arg)})"
    sep = " & " if isinstance(f, And) else " | "
    parts = []
    for a in f.args:
        s = to_text(a)
        if isinstance(a, (And, Or)):
            s = f"({s})"
        parts.append(s)
    return sep.join(parts)
