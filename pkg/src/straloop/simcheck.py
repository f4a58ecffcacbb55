"""Exact simulation, a brute-force switching oracle and closed-loop runs."""

from __future__ import annotations

import csv
import io
import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import intervals as iv
from .hastruct import AutomatonOut
from .intervals import Interval
from .ratset import FALSE, TRUE, Formula, holds
from .strl import LineSat, PwlTrajectory, Segment, StraFormula
from .synthesis import Schedule, SwitchedModel


class BlockingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExecutionTrace:
    trajectory: PwlTrajectory
    mode_timeline: tuple[tuple[str, Fraction], ...]

    def rows(self) -> list[tuple]:
        """``(time, mode, x...)`` at every breakpoint and at the end."""
        out = []
        segs = self.trajectory.segments
        for (mode, _), s in zip(self.mode_timeline, segs):
            out.append((s.start_time, mode, *s.start_state))
        last = segs[-1]
        out.append((last.end_time, self.mode_timeline[-1][0], *last.state_at(last.end_time)))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "mode", *self.trajectory.variables])
        for row in self.rows():
            w.writerow([str(v) for v in row])
        return buf.getvalue()


def simulate(model: SwitchedModel, x0: Sequence, schedule: Schedule, horizon) -> ExecutionTrace:
    horizon = Fraction(horizon)
    steps = schedule.steps
    if steps[-1][1] >= horizon and len(steps) > 1:
        raise ValueError("schedule switches at or after the horizon")
    state = tuple(Fraction(v) for v in x0)
    segs = []
    for k, (q, start) in enumerate(steps):
        end = steps[k + 1][1] if k + 1 < len(steps) else horizon
        seg = Segment(start, state, model.rate(q), end)
        segs.append(seg)
        state = seg.state_at(end)
    traj = PwlTrajectory(model.variables, tuple(segs))
    return ExecutionTrace(traj, tuple((q, t) for q, t in steps))


class _Search:
    """Depth-first search over grid schedules, pruned by the phi1 component."""

    def __init__(self, model: SwitchedModel, phi: StraFormula, grid: Fraction):
        self.model, self.phi, self.grid = model, phi, grid
        self.s1 = LineSat(phi.phi1)
        self.s2 = LineSat(phi.phi2)
        self.window = Interval(phi.lo, phi.hi, True, True)

    def run(self, x, now: Fraction, q: str, left: int) -> bool:
        v, rate = self.model.variables, self.model.rate(q)
        comp = iv.component(self.s1.times(v, x, rate, now), now)
        if comp is None:
            return False
        comp = comp & Interval(now, self.phi.hi, True, True)
        if comp.empty:
            return False
        if iv.intersect(self.s2.times(v, x, rate, now), [comp & self.window]):
            return True
        if left == 0:
            return False
        # next grid point strictly after now, switching only while phi1 still holds
        g = (now // self.grid + 1) * self.grid
        while g in comp and g < self.phi.hi:
            y = tuple(a + (g - now) * r for a, r in zip(x, rate))
            for q2 in self.model.successors(q):
                if self.run(y, g, q2, left - 1):
                    return True
            g += self.grid
        return False


def brute_force_min_switches(model: SwitchedModel, x0: Sequence, phi: StraFormula, max_switches: int,
                             time_grid) -> Optional[int]:
    """Fewest switches over schedules with switch times on ``time_grid``.

    Switch times are grid multiples in ``(0, u)``; every initial mode is
    tried.  Returns None when no such schedule with at most
    ``max_switches`` switches satisfies ``phi``.
    """
    grid = Fraction(time_grid)
    if grid <= 0:
        raise ValueError("time_grid must be positive")
    x0 = tuple(Fraction(v) for v in x0)
    search = _Search(model, phi, grid)
    for n in range(max_switches + 1):
        if any(search.run(x0, Fraction(0), q, n) for q in model.names):
            return n
    return None


def grid_points(box: Mapping[str, tuple], variables: Sequence[str], n: int) -> list[tuple[Fraction, ...]]:
    """Uniform rational grid with ``n`` points per axis (ends included) over ``box``."""
    if n < 2:
        raise ValueError("need at least two points per axis")
    axes = []
    for v in variables:
        lo, hi = (Fraction(b) for b in box[v])
        axes.append([lo + (hi - lo) * Fraction(i, n - 1) for i in range(n)])
    return list(itertools.product(*axes))


def sample_in(f: Formula, box: Mapping[str, tuple], variables: Sequence[str], count: int,
              rng: random.Random, per_axis: int = 65) -> list[tuple[Fraction, ...]]:
    """Up to ``count`` distinct grid points of ``box`` satisfying ``f``."""
    sat = LineSat(f)
    hits = []
    for p in grid_points(box, variables, per_axis):
        env = dict(zip(variables, p))
        if any(all(a.holds(env) for a in cube) for cube in sat.cubes):
            hits.append(p)
    if len(hits) <= count:
        return hits
    return rng.sample(hits, count)


def _pick(rng: random.Random, span: Interval, cap: Fraction) -> Fraction:
    """A random rational inside a bounded interval, endpoints included if closed."""
    lo, hi = span.lo, min(span.hi, cap) if span.hi is not None else cap
    if lo == hi:
        return lo
    choices = []
    if span.lo_closed:
        choices.append(lo)
    if span.hi_closed and (span.hi is None or hi == span.hi):
        choices.append(hi)
    k = rng.randint(1, 15)
    choices.append(lo + (hi - lo) * Fraction(k, 16))
    return rng.choice(choices)


def closed_loop_run(automaton: AutomatonOut, model: SwitchedModel, x0: Sequence, resolver: int | random.Random,
                    horizon, mode: Optional[str] = None, max_switches: int = 1000) -> ExecutionTrace:
    """One execution of the synthesized automaton up to ``horizon``.

    Inside a guard (and the domain) the seeded resolver may switch; on
    reaching the edge of the domain a switch is forced through an enabled
    guard.  No enabled guard there raises :class:`BlockingError`.
    """
    rng = resolver if isinstance(resolver, random.Random) else random.Random(resolver)
    horizon = Fraction(horizon)
    x = tuple(Fraction(v) for v in x0)
    env = dict(zip(model.variables, x))
    starts = [q for q in model.names if holds(automaton.init.get(q, _false()), env)]
    if mode is not None:
        if mode not in starts:
            raise ValueError(f"{x} is not an initial state of mode {mode}")
        q = mode
    elif not starts:
        raise ValueError(f"{x} is not in any initial set")
    else:
        q = rng.choice(starts)
    now = Fraction(0)
    segs, timeline = [], [(q, now)]
    v = model.variables
    guard_sat = {e: LineSat(g) for e, g in automaton.guards.guards.items()}
    dom_sat = {m: LineSat(d) for m, d in automaton.domains.items()}
    while now < horizon:
        rate = model.rate(q)
        dom = iv.component(dom_sat[q].times(v, x, rate, now), now)
        if dom is None:
            raise BlockingError(f"state {x} at time {now} outside the domain of {q}")
        stay = dom & Interval(now, horizon, True, False)
        options = []
        for (a, b), sat in guard_sat.items():
            if a != q:
                continue
            for span in iv.intersect(sat.times(v, x, rate, now), [stay]):
                options.append((b, span))
        forced = dom.hi is not None and dom.hi < horizon
        switch = None
        if options and (forced or rng.random() < 0.5):
            for _ in range(32):
                b, s = rng.choice(options)
                if forced and dom.hi_closed and s.hi == dom.hi and s.hi_closed and rng.random() < 0.5:
                    at = s.hi  # wait for the boundary
                else:
                    at = _pick(rng, s, s.hi if s.hi is not None else horizon)
                y = tuple(a + (at - now) * r for a, r in zip(x, rate))
                if holds(automaton.domains.get(b, _true()), dict(zip(v, y))):
                    switch = (b, at)
                    break
        if switch is None and forced:
            raise BlockingError(f"mode {q} must leave its domain at time {dom.hi} but no guard is enabled")
        if switch is None:
            segs.append(Segment(now, x, rate, horizon))
            break
        b, at = switch
        seg = Segment(now, x, rate, at)
        if at > now:
            segs.append(seg)
        x, now, q = seg.state_at(at), at, b
        if timeline[-1][1] == now:
            timeline[-1] = (q, now)
        else:
            timeline.append((q, now))
        if len(timeline) > max_switches:
            raise BlockingError("too many switches (possible Zeno behaviour)")
    if not segs:
        segs.append(Segment(now, x, model.rate(q), horizon))
    return ExecutionTrace(PwlTrajectory(v, tuple(segs)), tuple(timeline))


def _false():
    return FALSE


def _true():
    return TRUE
