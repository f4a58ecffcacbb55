"""Guard and domain synthesis for a switched hybrid automaton.

Every initial part ``Init[q,i]`` (at ``t = 0``) is an *entry*: a state-time
set of mode ``q`` that may still switch ``i`` times.  For an edge
``q -> q'`` the entries are grouped by budget ``b``; from budget ``b`` a
switch must land in ``X[q', b-1]``.  The weakest time-free guard for one
group is ``not exists t. reach & not target``; the edge guard is their
conjunction.  An empty conjunction is a conflict, resolved by looking
further up the family (``X[q', j]`` with a larger ``j``) and, failing
that, by dropping whole initial parts.  Entries reaching the guard are
pushed to ``q'`` as new entries, which may re-open the edges out of ``q'``.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .qelim import exists, forall
from .ratset import (
    FALSE,
    TIME,
    TRUE,
    Atom,
    Formula,
    LinExpr,
    conj,
    disj,
    dnf,
    eq,
    includes,
    is_empty,
    neg,
    normalize,
    substitute_affine,
)
from .strl import StraFormula
from .synthesis import InitPartition, StateTimeFamily, SwitchedModel

log = logging.getLogger(__name__)

Edge = tuple[str, str]
_BACK = "__back"
_LOOK = "__look"


def _backward(variables: Sequence[str], rate: Sequence, by: str) -> dict[str, LinExpr]:
    d = LinExpr.var(by)
    mp = {v: LinExpr.var(v) - d * Fraction(r) for v, r in zip(variables, rate)}
    mp[TIME] = LinExpr.var(TIME) - d
    return mp


def reach_set(K: Formula, rate: Sequence, variables: Sequence[str]) -> Formula:
    """All ``(x, t)`` on a flow line of constant ``rate`` started in ``K``."""
    body = substitute_affine(K, _backward(variables, rate, _BACK))
    return exists(_BACK, body, LinExpr.constant(0))


def reach_until(K: Formula, rate: Sequence, variables: Sequence[str], stop: Formula) -> Formula:
    """Like :func:`reach_set` but each flow line stops just before it enters ``stop``."""
    body = substitute_affine(K, _backward(variables, rate, _BACK))
    clear = forall(_LOOK, substitute_affine(neg(stop), _backward(variables, rate, _LOOK)),
                   LinExpr.constant(0), LinExpr.var(_BACK))
    return exists(_BACK, conj(body, clear), LinExpr.constant(0))


def project_time(f: Formula) -> Formula:
    return exists(TIME, f)


def weakest_guard(reach: Formula, target: Formula, within_reach: bool = True) -> Formula:
    """Largest time-free ``G`` with ``reach & G`` inside ``target``.

    With ``within_reach`` the guard is confined to states the flow actually
    visits (the time projection of ``reach``); without it, unvisited states
    are admitted vacuously.
    """
    bad = exists(TIME, conj(reach, neg(target)))
    if not within_reach:
        return normalize(neg(bad))
    return normalize(conj(project_time(reach), neg(bad)))


def exit_boundary(guard: Formula, rate: Sequence, variables: Sequence[str]) -> Formula:
    """Guard faces the flow leaves through (``b . a < 0``), conjoined per conjunct."""
    pos = {v: Fraction(r) for v, r in zip(variables, rate)}
    parts = []
    for cube in dnf(guard):
        faces = [a for a in cube if sum(c * pos.get(v, 0) for v, c in a.coeffs) < 0]
        parts.append(conj(*sorted(faces, key=Atom.sort_key)))
    return normalize(disj(*parts)) if parts else TRUE


@dataclass
class GuardTable:
    guards: dict[Edge, Formula] = field(default_factory=dict)
    per_i: dict[tuple[Edge, int], Formula] = field(default_factory=dict)
    targets: dict[tuple[Edge, int], int] = field(default_factory=dict)
    reach: dict[tuple[Edge, int], Formula] = field(default_factory=dict)
    dropped_inits: list[tuple[str, int, Formula]] = field(default_factory=list)


@dataclass
class AutomatonOut:
    init: dict[str, Formula]
    guards: GuardTable
    domains: dict[str, Formula]
    complete: bool = True
    unresolved: list[Edge] = field(default_factory=list)


@dataclass
class _Entry:
    mode: str
    level: int
    region: Formula
    root: int


class _Assembler:
    def __init__(self, model: SwitchedModel, fam: StateTimeFamily, partition: InitPartition,
                 phi: StraFormula, init: Optional[Mapping[str, Formula]], budget: int, max_tries: int):
        self.model, self.fam, self.phi = model, fam, phi
        self.budget, self.max_tries = budget, max_tries
        self.done = conj(phi.phi1, phi.phi2, phi.window)
        self.top = fam.depth
        self.roots: list[tuple[str, int, Formula]] = []
        self.entries: list[_Entry] = []
        self.dropped: set[int] = set()
        self._rb: dict = {}
        at_zero = eq(LinExpr.var(TIME), 0)
        for (q, i), part in sorted(partition.parts.items(), key=lambda kv: (model.names.index(kv[0][0]), kv[0][1])):
            if init is not None and q in init:
                part = normalize(conj(part, init[q]))
            if is_empty(part):
                continue
            rid = len(self.roots)
            self.roots.append((q, i, part))
            self.entries.append(_Entry(q, i, normalize(conj(part, at_zero)), rid))

    def live(self, q: str, skip: frozenset = frozenset()) -> list[_Entry]:
        return [e for e in self.entries if e.mode == q and e.root not in self.dropped and e.root not in skip]

    def rb(self, e: _Entry) -> Formula:
        key = (e.mode, e.region)
        got = self._rb.get(key)
        if got is None:
            got = normalize(reach_until(e.region, self.model.rate(e.mode), self.model.variables, self.done))
            self._rb[key] = got
        return got

    def solve(self, edge: Edge, skip: frozenset):
        """Guard for ``edge`` ignoring roots in ``skip``; None on conflict."""
        q, q2 = edge
        groups: dict[int, list[_Entry]] = {}
        for e in self.live(q, skip):
            groups.setdefault(e.level, []).append(e)
        levels = sorted(groups)
        reach = {b: normalize(disj(*(self.rb(e) for e in groups[b]))) for b in levels}
        levels = [b for b in levels if not is_empty(reach[b])]
        if not levels:
            return FALSE, {}, {}, reach
        envelope = normalize(disj(*(project_time(reach[b]) for b in levels)))
        base = {b: min(max(b - 1, 0), self.top) for b in levels}
        cache: dict[tuple[int, int], Formula] = {}

        def w(b: int, j: int) -> Formula:
            if (b, j) not in cache:
                cache[(b, j)] = weakest_guard(reach[b], self.fam.X(q2, j), within_reach=False)
            return cache[(b, j)]

        room = [self.top - base[b] for b in levels]
        tries = 0
        for total in range(sum(room) + 1):
            for inc in _compositions(total, room):
                tries += 1
                if tries > self.max_tries:
                    return None, {}, {}, reach
                js = {b: base[b] + d for b, d in zip(levels, inc)}
                g = normalize(conj(envelope, *(w(b, js[b]) for b in levels)))
                if not is_empty(g):
                    per = {b: normalize(conj(envelope, w(b, js[b]))) for b in levels}
                    return g, per, js, reach
        return None, {}, {}, reach


def _compositions(total: int, room: Sequence[int]):
    """Vectors ``d`` with ``sum(d) == total`` and ``0 <= d[i] <= room[i]``, lexicographic."""
    if not room:
        if total == 0:
            yield ()
        return
    for first in range(min(total, room[0]) + 1):
        for rest in _compositions(total - first, room[1:]):
            yield (first,) + rest


def resolve_and_assemble(model: SwitchedModel, family: StateTimeFamily, partition: InitPartition,
                         phi: StraFormula, init: Optional[Mapping[str, Formula]] = None,
                         retry_budget: int = 3, max_tries: int = 256) -> AutomatonOut:
    """Guards, domains and initial sets for the automaton over ``model.edges``.

    ``init`` optionally confines the initial states per mode before the
    construction starts.
    """
    A = _Assembler(model, family, partition, phi, init, retry_budget, max_tries)
    table = GuardTable()
    edges = model.edge_list()
    queue = deque(edges)
    queued = set(edges)
    passes = {e: 0 for e in edges}
    unresolved: list[Edge] = []
    while queue:
        edge = queue.popleft()
        queued.discard(edge)
        if passes[edge] >= retry_budget:
            if edge not in unresolved:
                unresolved.append(edge)
            continue
        passes[edge] += 1
        q, q2 = edge
        g, per, js, reach = A.solve(edge, frozenset())
        while g is None:
            # drop a single initial part if that suffices, else the first candidate
            cands = sorted({e.root for e in A.live(q)}, key=lambda r: (-A.roots[r][1], r))
            chosen = None
            for r in cands:
                res = A.solve(edge, frozenset([r]))
                if res[0] is not None:
                    chosen, (g, per, js, reach) = r, res
                    break
            chosen = cands[0] if chosen is None else chosen
            A.dropped.add(chosen)
            mode, lvl, part = A.roots[chosen]
            table.dropped_inits.append((mode, lvl, part))
            log.info("edge %s->%s: dropped Init[%s]^%d", q, q2, mode, lvl)
            if g is None:
                g, per, js, reach = A.solve(edge, frozenset())
        if is_empty(g):
            table.guards.pop(edge, None)
            continue
        table.guards[edge] = g
        for b, f in per.items():
            table.per_i[(edge, b)] = f
            table.targets[(edge, b)] = js[b]
            table.reach[(edge, b)] = reach[b]
        grew = False
        for e in list(A.live(q)):
            if e.level not in js:
                continue
            j = js[e.level]
            new = normalize(conj(g, A.rb(e)))
            if is_empty(new):
                continue
            have = disj(*(x.region for x in A.entries if x.mode == q2 and x.level == j and x.root == e.root))
            if includes(have, new):
                continue
            A.entries.append(_Entry(q2, j, new, e.root))
            grew = True
        if grew:
            for nxt in model.edge_list():
                if nxt[0] == q2 and nxt not in queued:
                    queue.append(nxt)
                    queued.add(nxt)
    # guards of edges whose source lost every entry stay as computed (harmless)
    init_sets = {q: normalize(disj(*(p for r, (m, _, p) in enumerate(A.roots) if m == q and r not in A.dropped)))
                 for q in model.names}
    domains = {}
    for q in model.names:
        outs = [exit_boundary(g, model.rate(q), model.variables) for (a, _), g in table.guards.items() if a == q]
        domains[q] = normalize(conj(*outs)) if outs else TRUE
    # initial states must satisfy the invariant of their mode
    init_sets = {q: normalize(conj(f, domains[q])) for q, f in init_sets.items()}
    return AutomatonOut(init_sets, table, domains, complete=not unresolved, unresolved=unresolved)
