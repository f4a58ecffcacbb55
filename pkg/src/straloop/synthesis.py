"""State-time sets, fixpoint iteration and minimal-switching controllers.

For a mode with constant rate ``a`` the state at time ``t + d`` is
``x + d*a``, so "reach phi2 within the window while phi1 holds, with at
most i switches" is a linear formula in ``(x, t, d, h)`` that quantifier
elimination turns into a set over ``(x, t)``:

* ``X[q,0] = exists d >= 0. phi2(x+d*a, t+d) & l <= t+d <= u
  & forall h in [0,d]. phi1(x+h*a, t+h)``
* ``X[q,i] = X[q,i-1] | OR_{q->q'} exists d >= 0. X[q',i-1](x+d*a, t+d)
  & forall h in [0,d]. phi1(x+h*a, t+h)``
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import intervals as iv
from .qelim import exists, forall
from .ratset import (
    FALSE,
    TIME,
    Formula,
    LinExpr,
    conj,
    disj,
    equivalent,
    ge,
    holds,
    includes,
    is_empty,
    neg,
    normalize,
    size,
    substitute_affine,
)
from .strl import LineSat, StraFormula

log = logging.getLogger(__name__)

DELTA = "__delta"
HOLD = "__hold"


class NotSynthesizable(ValueError):
    pass


class NoTransitionWindow(ValueError):
    pass


@dataclass(frozen=True)
class Mode:
    name: str
    rate: tuple[Fraction, ...]


@dataclass(frozen=True)
class SwitchedModel:
    variables: tuple[str, ...]
    modes: tuple[Mode, ...]
    edges: Optional[tuple[tuple[str, str], ...]] = None

    def __post_init__(self):
        if not self.modes:
            raise ValueError("a switched model needs at least one mode")
        if TIME in self.variables or len(set(self.variables)) != len(self.variables):
            raise ValueError("state variables must be distinct and must not be 't'")
        names = [m.name for m in self.modes]
        if len(set(names)) != len(names):
            raise ValueError("mode names must be unique")
        for m in self.modes:
            if len(m.rate) != len(self.variables):
                raise ValueError(f"mode {m.name}: rate has {len(m.rate)} entries, expected {len(self.variables)}")
        for a, b in self.edges or ():
            if a == b:
                raise ValueError(f"self-loop {a}->{b}")
            if a not in names or b not in names:
                raise ValueError(f"edge {a}->{b} mentions an unknown mode")

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.modes)

    def mode(self, name: str) -> Mode:
        for m in self.modes:
            if m.name == name:
                return m
        raise KeyError(name)

    def rate(self, name: str) -> tuple[Fraction, ...]:
        return self.mode(name).rate

    def edge_list(self) -> list[tuple[str, str]]:
        if self.edges is None:
            return [(a, b) for a in self.names for b in self.names if a != b]
        return list(self.edges)

    def successors(self, q: str) -> list[str]:
        """Targets of ``q`` in mode-declaration order."""
        targets = {b for a, b in self.edge_list() if a == q}
        return [n for n in self.names if n in targets]


def flow_shift(model: SwitchedModel, q: str, by: str, sign: int = 1) -> dict[str, LinExpr]:
    """Substitution ``x -> x + sign*by*a_q``, ``t -> t + sign*by``."""
    d = LinExpr.var(by) * sign
    mp = {v: LinExpr.var(v) + d * r for v, r in zip(model.variables, model.rate(q))}
    mp[TIME] = LinExpr.var(TIME) + d
    return mp


_ALWAYS: dict = {}


def stays_in(model: SwitchedModel, q: str, phi1: Formula, method: str = "vs") -> Formula:
    """``forall h in [0, DELTA]: phi1`` along mode ``q``, over ``(x, t, DELTA)``."""
    key = (model.variables, model.rate(q), phi1, method)
    got = _ALWAYS.get(key)
    if got is None:
        body = substitute_affine(phi1, flow_shift(model, q, HOLD))
        got = forall(HOLD, body, LinExpr.constant(0), LinExpr.var(DELTA), method=method)
        _ALWAYS[key] = got
    return got


def _nonneg_time() -> Formula:
    return ge(LinExpr.var(TIME), 0)


def compute_X0(model: SwitchedModel, q: str, phi: StraFormula, method: str = "vs") -> Formula:
    t_end = LinExpr.var(TIME) + LinExpr.var(DELTA)
    body = conj(
        substitute_affine(phi.phi2, flow_shift(model, q, DELTA)),
        ge(t_end, phi.lo),
        ge(phi.hi, t_end),
        stays_in(model, q, phi.phi1, method),
    )
    out = exists(DELTA, body, LinExpr.constant(0), method=method)
    return normalize(conj(out, _nonneg_time()))


def compute_Xstep(model: SwitchedModel, q: str, prev: Mapping[str, Formula], phi1: Formula,
                  method: str = "vs") -> Formula:
    """``X[q,i]`` from the previous layer ``prev`` (which must include ``prev[q]``)."""
    parts = [prev.get(q, FALSE)]
    hold = stays_in(model, q, phi1, method)
    for q2 in model.successors(q):
        target = prev[q2]
        if is_empty(target):
            continue
        body = conj(substitute_affine(target, flow_shift(model, q, DELTA)), hold)
        parts.append(exists(DELTA, body, LinExpr.constant(0), method=method))
    return normalize(conj(disj(*parts), _nonneg_time()))


@dataclass
class StateTimeFamily:
    model: SwitchedModel
    phi: StraFormula
    k: int
    sets: dict[tuple[str, int], Formula] = field(default_factory=dict)
    fixpoint_at: Optional[int] = None
    stats: list[dict] = field(default_factory=list)

    @property
    def depth(self) -> int:
        """Largest computed index."""
        return max(i for _, i in self.sets)

    def X(self, q: str, i: int) -> Formula:
        """``X[q,i]``; indices past a reached fixpoint reuse the stable set."""
        if i < 0:
            return FALSE
        if i > self.depth:
            if self.fixpoint_at is None:
                raise KeyError(f"X[{q},{i}] was not computed")
            i = self.depth
        return self.sets[(q, i)]


@dataclass
class InitPartition:
    variables: tuple[str, ...]
    parts: dict[tuple[str, int], Formula] = field(default_factory=dict)

    def containing(self, x0: Sequence) -> list[tuple[str, int]]:
        env = dict(zip(self.variables, x0))
        return [key for key, f in self.parts.items() if holds(f, env)]

    def level(self, x0: Sequence) -> Optional[int]:
        hits = self.containing(x0)
        return min(i for _, i in hits) if hits else None

    def union(self) -> Formula:
        return disj(*self.parts.values())


def _layer(args):
    model, q, prev, phi, method = args
    if prev is None:
        return compute_X0(model, q, phi, method)
    return compute_Xstep(model, q, prev, phi.phi1, method)


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("STRALOOP_THREADS", "1")))
    except ValueError:
        return 1


def run_fixpoint(model: SwitchedModel, phi: StraFormula, k: int, method: str = "vs",
                 threads: Optional[int] = None) -> tuple[StateTimeFamily, InitPartition]:
    """Iterate the layers up to ``k`` or until they stop growing.

    ``fixpoint_at`` is the first index whose sets reappear unchanged in the
    next layer, so the family is complete from there on.  Detecting it needs
    that next layer, hence it is only reported when it is at most ``k - 1``.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    threads = threads or default_threads()
    fam = StateTimeFamily(model, phi, k)
    pool = ProcessPoolExecutor(threads) if threads > 1 and len(model.modes) > 1 else None
    try:
        prev = None
        for i in range(k + 1):
            t0 = time.perf_counter()
            jobs = [(model, q, prev, phi, method) for q in model.names]
            layer = list(pool.map(_layer, jobs)) if pool else [_layer(j) for j in jobs]
            cur = dict(zip(model.names, layer))
            for q, f in cur.items():
                fam.sets[(q, i)] = f
            fam.stats.append({
                "iteration": i,
                "seconds": round(time.perf_counter() - t0, 6),
                "sizes": {q: dict(zip(("conjuncts", "atoms"), size(f))) for q, f in cur.items()},
            })
            log.info("layer %d done in %.3fs", i, fam.stats[-1]["seconds"])
            if prev is not None and all(equivalent(cur[q], prev[q]) for q in model.names):
                fam.fixpoint_at = i - 1
                break
            prev = cur
    finally:
        if pool:
            pool.shutdown()
    return fam, initial_partition(fam)


def initial_partition(fam: StateTimeFamily) -> InitPartition:
    at_zero = {TIME: LinExpr.constant(0)}
    part = InitPartition(fam.model.variables)
    for q in fam.model.names:
        for i in range(fam.depth + 1):
            new = conj(fam.X(q, i), neg(fam.X(q, i - 1)))
            part.parts[(q, i)] = normalize(substitute_affine(new, at_zero))
    return part


# --- controller extraction ---------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """``(q0, 0)(q1, t1)...``: the mode ``qj`` is active from ``tj`` on."""

    steps: tuple[tuple[str, Fraction], ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("empty schedule")
        if self.steps[0][1] != 0:
            raise ValueError("a schedule starts at time 0")
        for (_, a), (_, b) in zip(self.steps, self.steps[1:]):
            if not b > a:
                raise ValueError("switch times must strictly increase")
        for (p, _), (q, _) in zip(self.steps, self.steps[1:]):
            if p == q:
                raise ValueError(f"consecutive steps in the same mode {p}")

    @property
    def switches(self) -> int:
        return len(self.steps) - 1

    def __str__(self) -> str:
        return "".join(f"({q},{t})" for q, t in self.steps)


@dataclass(frozen=True)
class Line:
    """Affine motion ``point + (s - time) * rate`` over ``variables``."""

    variables: tuple[str, ...]
    point: tuple[Fraction, ...]
    time: Fraction
    rate: tuple[Fraction, ...]

    def at(self, s) -> tuple[Fraction, ...]:
        d = Fraction(s) - self.time
        return tuple(x + d * r for x, r in zip(self.point, self.rate))


def transition_window(line: Line, target: Formula, guard: Optional[Formula] = None) -> list[iv.Interval]:
    """Times ``s > line.time`` with ``line.at(s)`` in ``target`` at ``t = s``.

    With ``guard``, additionally require it to hold on all of ``[line.time, s]``.
    """
    after = iv.Interval(line.time, None, False, False)
    times = LineSat(target).times(line.variables, line.point, line.rate, line.time)
    if guard is not None:
        comp = iv.component(LineSat(guard).times(line.variables, line.point, line.rate, line.time), line.time)
        if comp is None:
            return []
        after = after & comp
    return iv.intersect(times, [after])


def pick_switch_time(line: Line, target: Formula, guard: Optional[Formula] = None) -> Fraction:
    """Earliest feasible time if attained, else ``inf + min(1, gap/2)``.

    ``gap`` is the length of the first feasible interval (infinite when it
    is unbounded), so the result always lies inside that interval.
    """
    window = transition_window(line, target, guard)
    if not window:
        raise NoTransitionWindow("no transition window")
    first = window[0]
    if first.lo_closed:
        return first.lo
    step = Fraction(1) if first.hi is None else min(Fraction(1), (first.hi - first.lo) / 2)
    return first.lo + step


def _schedule_from(x0, q0: str, level: int, fam: StateTimeFamily) -> Optional[Schedule]:
    model = fam.model
    steps = [(q0, Fraction(0))]
    point, now, q = tuple(x0), Fraction(0), q0
    for j in range(1, level + 1):
        line = Line(model.variables, point, now, model.rate(q))
        for q2 in model.successors(q):
            try:
                s = pick_switch_time(line, fam.X(q2, level - j), fam.phi.phi1)
            except NoTransitionWindow:
                continue
            steps.append((q2, s))
            point, now, q = line.at(s), s, q2
            break
        else:
            return None
    return Schedule(tuple(steps))


def extract_controller(x0: Sequence, family: StateTimeFamily, partition: InitPartition,
                       model: Optional[SwitchedModel] = None) -> Schedule:
    """A schedule with the least number of switches that works from ``x0``.

    Among modes sharing the least partition index the one whose first
    switch comes earliest is used; remaining ties follow declaration order.
    """
    if model is not None and model != family.model:
        raise ValueError("family was computed for a different model")
    x0 = tuple(Fraction(v) for v in x0)
    hits = partition.containing(x0)
    if not hits:
        raise NotSynthesizable(f"x0=({', '.join(map(str, x0))}) is not synthesizable within {family.k} switches")
    level = min(i for _, i in hits)
    order = family.model.names
    cands = sorted((q for q, i in hits if i == level), key=order.index)
    best = None
    for q in cands:
        sched = _schedule_from(x0, q, level, family)
        if sched is None:
            continue
        if level == 0:
            return sched
        if best is None or sched.steps[1][1] < best.steps[1][1]:
            best = sched
    if best is None:
        raise NotSynthesizable(f"no switching sequence found for x0=({', '.join(map(str, x0))})")
    return best
