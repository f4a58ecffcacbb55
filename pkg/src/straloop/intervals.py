"""Rational intervals with open/closed ends and their finite unions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional


@dataclass(frozen=True)
class Interval:
    lo: Optional[Fraction]  # None means -inf
    hi: Optional[Fraction]  # None means +inf
    lo_closed: bool = True
    hi_closed: bool = True

    @staticmethod
    def closed(lo, hi) -> "Interval":
        return Interval(Fraction(lo), Fraction(hi), True, True)

    @staticmethod
    def everything() -> "Interval":
        return Interval(None, None, False, False)

    @property
    def empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        if self.lo < self.hi:
            return False
        return not (self.lo == self.hi and self.lo_closed and self.hi_closed)

    def __contains__(self, x) -> bool:
        if self.lo is not None and (x < self.lo or (x == self.lo and not self.lo_closed)):
            return False
        if self.hi is not None and (x > self.hi or (x == self.hi and not self.hi_closed)):
            return False
        return True

    def __and__(self, other: "Interval") -> "Interval":
        lo, lc = _max_lo((self.lo, self.lo_closed), (other.lo, other.lo_closed))
        hi, hc = _min_hi((self.hi, self.hi_closed), (other.hi, other.hi_closed))
        return Interval(lo, hi, lc, hc)

    def __str__(self) -> str:
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "inf" if self.hi is None else str(self.hi)
        return f"{'[' if self.lo_closed else '('}{lo},{hi}{']' if self.hi_closed else ')'}"


def _max_lo(a, b):
    if a[0] is None:
        return b
    if b[0] is None:
        return a
    if a[0] != b[0]:
        return a if a[0] > b[0] else b
    return a[0], a[1] and b[1]


def _min_hi(a, b):
    if a[0] is None:
        return b
    if b[0] is None:
        return a
    if a[0] != b[0]:
        return a if a[0] < b[0] else b
    return a[0], a[1] and b[1]


def _lo_key(iv: Interval):
    # -inf first; at equal value, closed end first
    return (0, 0, 0) if iv.lo is None else (1, iv.lo, 0 if iv.lo_closed else 1)


def union(ivs: Iterable[Interval]) -> list[Interval]:
    """Sorted disjoint union; touching intervals are merged when no gap remains."""
    items = sorted((iv for iv in ivs if not iv.empty), key=_lo_key)
    out: list[Interval] = []
    for iv in items:
        if out:
            last = out[-1]
            if last.hi is None:
                continue
            touch = iv.lo is None or iv.lo < last.hi or (
                iv.lo == last.hi and (last.hi_closed or iv.lo_closed))
            if touch:
                hi, hc = _max_hi((last.hi, last.hi_closed), (iv.hi, iv.hi_closed))
                out[-1] = Interval(last.lo, hi, last.lo_closed, hc)
                continue
        out.append(iv)
    return out


def _max_hi(a, b):
    if a[0] is None or b[0] is None:
        return None, False
    if a[0] != b[0]:
        return a if a[0] > b[0] else b
    return a[0], a[1] or b[1]


def intersect(a: list[Interval], b: list[Interval]) -> list[Interval]:
    return union(x & y for x in a for y in b)


def component(ivs: list[Interval], x) -> Optional[Interval]:
    """The interval of a disjoint union containing ``x``."""
    for iv in ivs:
        if x in iv:
            return iv
    return None


def affine_interval(alpha: Fraction, beta: Fraction, strict: bool) -> Optional[Interval]:
    """Solutions of ``alpha + beta*s >= 0`` (``> 0`` if strict); None if empty."""
    if beta == 0:
        ok = alpha > 0 or (alpha == 0 and not strict)
        return Interval.everything() if ok else None
    root = -alpha / beta
    if beta > 0:
        return Interval(root, None, not strict, False)
    return Interval(None, root, False, not strict)
