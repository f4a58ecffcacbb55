"""Exact feasibility of conjunctions of linear atoms over the rationals.

Rows are triples ``(coeffs, const, strict)`` meaning
``sum(c * v) + const > 0`` (strict) or ``>= 0``, where ``coeffs`` is a sorted
tuple of ``(var, int)`` pairs.  Two deciders are provided: Fourier-Motzkin
with strictness tracking, cheap for few variables, and a dense two-phase
simplex (Bland's rule) over :class:`fractions.Fraction`, used otherwise.
Both are exact; the test-suite cross-checks them.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

Row = tuple[tuple[tuple[str, int], ...], int, bool]

# systems with at most this many variables go through Fourier-Motzkin first;
# elimination that grows past FM_MAX_ROWS rows falls back to the simplex
FM_MAX_VARS = 5
FM_MAX_ROWS = 60


def direction(coeffs: tuple[tuple[str, int], ...]) -> tuple[tuple[tuple[str, int], ...], int]:
    """Split integer coefficients into (primitive direction, positive scale)."""
    g = 0
    for _, c in coeffs:
        g = gcd(g, c)
    if g == 1:
        return coeffs, 1
    return tuple((v, c // g) for v, c in coeffs), g


def tighten(rows: Iterable[Row]) -> dict | None:
    """Group rows by direction and keep the tightest lower bound per direction.

    Returns ``{direction: (bound, strict, row)}`` meaning ``d.x >= bound``
    (``>`` when strict), or ``None`` when a constant row is false or two
    opposite directions clash.  Constant rows that hold are dropped.
    """
    best: dict = {}
    for row in rows:
        coeffs, const, strict = row
        if not coeffs:
            if const < 0 or (const == 0 and strict):
                return None
            continue
        d, g = direction(coeffs)
        bound = Fraction(-const, g)
        cur = best.get(d)
        if cur is None or bound > cur[0] or (bound == cur[0] and strict and not cur[1]):
            best[d] = (bound, strict, row)
    for d, (lo, lo_strict, _) in best.items():
        opp = tuple((v, -c) for v, c in d)
        other = best.get(opp)
        if other is None:
            continue
        hi = -other[0]
        if lo > hi or (lo == hi and (lo_strict or other[1])):
            return None
    return best


def feasible(rows: Sequence[Row]) -> bool:
    """Decide whether some rational point satisfies every row."""
    best = tighten(rows)
    if best is None:
        return False
    rows = [r for _, _, r in best.values()]
    names = {v for coeffs, _, _ in rows for v, _ in coeffs}
    if all(len(coeffs) == 1 for coeffs, _, _ in rows):
        # independent interval constraints, already checked pairwise
        return True
    if len(names) <= FM_MAX_VARS:
        got = fm_feasible(rows, FM_MAX_ROWS)
        if got is not None:
            return got
    return simplex_feasible(rows)


# --- Fourier-Motzkin ---------------------------------------------------------

def _combine(lo: Row, up: Row, var: str) -> Row:
    a = dict(lo[0])[var]
    b = -dict(up[0])[var]
    acc: dict[str, int] = {}
    for v, c in lo[0]:
        acc[v] = acc.get(v, 0) + b * c
    for v, c in up[0]:
        acc[v] = acc.get(v, 0) + a * c
    coeffs = tuple(sorted((v, c) for v, c in acc.items() if c and v != var))
    const = b * lo[1] + a * up[1]
    g = gcd(const, *[c for _, c in coeffs]) if coeffs else (abs(const) or 1)
    if g > 1:
        coeffs = tuple((v, c // g) for v, c in coeffs)
        const //= g
    return coeffs, const, lo[2] or up[2]


def fm_feasible(rows: Sequence[Row], max_rows: int | None = None) -> bool | None:
    """Fourier-Motzkin decision; None if the system outgrows ``max_rows``."""
    rows = list(rows)
    while True:
        best = tighten(rows)
        if best is None:
            return False
        rows = [r for _, _, r in best.values()]
        if not rows:
            return True
        counts: dict[str, list[int]] = {}
        for coeffs, _, _ in rows:
            for v, c in coeffs:
                pn = counts.setdefault(v, [0, 0])
                pn[0 if c > 0 else 1] += 1
        if all(len(coeffs) == 1 for coeffs, _, _ in rows):
            return True
        var = min(sorted(counts), key=lambda v: counts[v][0] * counts[v][1] - sum(counts[v]))
        lows, ups, rest = [], [], []
        for r in rows:
            c = dict(r[0]).get(var, 0)
            (lows if c > 0 else ups if c < 0 else rest).append(r)
        if max_rows is not None and len(rest) + len(lows) * len(ups) > max_rows:
            return None
        rows = rest + [_combine(lo, up, var) for lo in lows for up in ups]


# --- simplex -----------------------------------------------------------------

def _pivot(T: list[list[Fraction]], obj: list[Fraction], r: int, col: int) -> None:
    pr = T[r]
    pv = pr[col]
    if pv != 1:
        pr = [x / pv for x in pr]
        T[r] = pr
    nz = [j for j, y in enumerate(pr) if y]
    for i, row in enumerate(T):
        if i != r:
            f = row[col]
            if f:
                for j in nz:
                    row[j] -= f * pr[j]
    f = obj[col]
    if f:
        for j in nz:
            obj[j] -= f * pr[j]


def _run(T, obj, basis, allowed) -> bool:
    """Maximise; returns False when unbounded."""
    while True:
        col = next((j for j in allowed if obj[j] < 0), None)
        if col is None:
            return True
        r, ratio = None, None
        for i, row in enumerate(T):
            if row[col] > 0:
                q = row[-1] / row[col]
                if ratio is None or q < ratio or (q == ratio and basis[i] < basis[r]):
                    r, ratio = i, q
        if r is None:
            return False
        _pivot(T, obj, r, col)
        basis[r] = col


def lp_max(c: Sequence, A: Sequence[Sequence], b: Sequence):
    """Maximise ``c.y`` subject to ``A y <= b``, ``y >= 0``, exactly.

    Returns ``None`` if infeasible, ``float('inf')`` if unbounded, else the
    optimal value as a Fraction.
    """
    m, n = len(A), len(c)
    arts = [i for i in range(m) if b[i] < 0]
    width = n + m + len(arts)
    T: list[list[Fraction]] = []
    basis: list[int] = []
    for i in range(m):
        row = [Fraction(x) for x in A[i]] + [Fraction(0)] * (m + len(arts)) + [Fraction(b[i])]
        row[n + i] = Fraction(1)
        if b[i] < 0:
            row = [-x for x in row]
        T.append(row)
        basis.append(n + i)
    for k, i in enumerate(arts):
        T[i][n + m + k] = Fraction(1)
        basis[i] = n + m + k
    if arts:
        obj = [Fraction(0)] * (width + 1)
        for k in range(len(arts)):
            obj[n + m + k] = Fraction(1)
        for i in arts:
            obj = [x - y for x, y in zip(obj, T[i])]
        _run(T, obj, basis, range(width))
        if obj[-1] != 0:
            return None
        # drive zero-level artificials out of the basis
        for i in range(len(T) - 1, -1, -1):
            if basis[i] >= n + m:
                col = next((j for j in range(n + m) if T[i][j] != 0), None)
                if col is None:
                    del T[i]
                    del basis[i]
                else:
                    _pivot(T, obj, i, col)
                    basis[i] = col
    obj = [Fraction(-x) for x in c] + [Fraction(0)] * (width - n) + [Fraction(0)]
    for i, bi in enumerate(basis):
        f = obj[bi]
        if f:
            obj = [x - f * y for x, y in zip(obj, T[i])]
    if not _run(T, obj, basis, range(n + m)):
        return float("inf")
    return obj[-1]


def simplex_feasible(rows: Sequence[Row]) -> bool:
    names = sorted({v for coeffs, _, _ in rows for v, _ in coeffs})
    idx = {v: i for i, v in enumerate(names)}
    n = len(names)
    strict = any(s for _, _, s in rows)
    ncol = 2 * n + (1 if strict else 0)
    A, b = [], []
    # c.x + k >= s  becomes  -c.p + c.m + s <= k
    for coeffs, const, s in rows:
        row = [0] * ncol
        for v, c in coeffs:
            row[idx[v]] = -c
            row[n + idx[v]] = c
        if s:
            row[2 * n] = 1
        A.append(row)
        b.append(const)
    if strict:
        cap = [0] * ncol
        cap[2 * n] = 1
        A.append(cap)
        b.append(1)
    obj = [0] * ncol
    if strict:
        obj[2 * n] = 1
    res = lp_max(obj, A, b)
    if res is None:
        return False
    return res > 0 if strict else True
