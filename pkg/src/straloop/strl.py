"""ST-RA formulas ``phi1 U[l,u] phi2`` and their exact monitor.

Satisfaction along a piecewise-linear trajectory is decided symbolically:
each atom is affine in time on a segment, so every operand holds on a
finite union of rational intervals, and the until reduces to interval
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import intervals as iv
from .intervals import Interval
from .ratset import TIME, Atom, Formula, LinExpr, conj, dnf, ge, le, substitute_affine, to_text
from .syntax import ParseError, NestedTemporalError, parse_formula, parse_spec

__all__ = [
    "StraFormula",
    "Segment",
    "PwlTrajectory",
    "LineSat",
    "parse",
    "monitor",
    "until",
    "ParseError",
    "NestedTemporalError",
    "HorizonError",
]


class HorizonError(ValueError):
    pass


@dataclass(frozen=True)
class StraFormula:
    phi1: Formula
    phi2: Formula
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi):
            raise ValueError(f"need 0 <= l <= u, got [{self.lo},{self.hi}]")

    @property
    def window(self) -> Formula:
        """``t in I`` as a formula."""
        t = LinExpr.var(TIME)
        return conj(ge(t, self.lo), le(t, self.hi))

    def __str__(self) -> str:
        return f"({to_text(self.phi1)}) U[{self.lo},{self.hi}] ({to_text(self.phi2)})"


def parse(text: str, variables=None) -> StraFormula | Formula:
    """Parse an until formula, or a plain formula when no ``U`` occurs."""
    try:
        phi1, phi2, lo, hi = parse_spec(text, variables)
    except NestedTemporalError:
        raise
    except ParseError as exc:
        if "expected an until formula" not in exc.message:
            raise
        return parse_formula(text, variables)
    return StraFormula(phi1, phi2, lo, hi)


@dataclass(frozen=True)
class Segment:
    start_time: Fraction
    start_state: tuple[Fraction, ...]
    rate: tuple[Fraction, ...]
    end_time: Fraction

    def state_at(self, t) -> tuple[Fraction, ...]:
        dt = Fraction(t) - self.start_time
        return tuple(x + dt * r for x, r in zip(self.start_state, self.rate))


@dataclass(frozen=True)
class PwlTrajectory:
    variables: tuple[str, ...]
    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        for s in self.segments:
            if len(s.start_state) != len(self.variables) or len(s.rate) != len(self.variables):
                raise ValueError("segment dimension mismatch")
            if s.end_time < s.start_time:
                raise ValueError("segment ends before it starts")
        for a, b in zip(self.segments, self.segments[1:]):
            if a.end_time != b.start_time:
                raise ValueError("segments are not contiguous")
            if a.state_at(a.end_time) != b.start_state:
                raise ValueError("state is discontinuous across segments")

    @property
    def start(self) -> Fraction:
        return self.segments[0].start_time

    @property
    def end(self) -> Fraction:
        return self.segments[-1].end_time

    def state_at(self, t) -> tuple[Fraction, ...]:
        t = Fraction(t)
        for s in self.segments:
            if s.start_time <= t <= s.end_time:
                return s.state_at(t)
        raise ValueError(f"time {t} outside [{self.start},{self.end}]")

    def rebase(self, tau) -> "PwlTrajectory":
        """The suffix from ``tau`` with time shifted so that it starts at 0."""
        tau = Fraction(tau)
        segs = []
        for s in self.segments:
            if s.end_time < tau or (s.end_time == tau and s is not self.segments[-1]):
                continue
            lo = max(s.start_time, tau)
            segs.append(Segment(lo - tau, s.state_at(lo), s.rate, s.end_time - tau))
        return PwlTrajectory(self.variables, tuple(segs))


class LineSat:
    """Times at which a formula holds along affine motions ``x0 + (t-t0)*rate``."""

    def __init__(self, f: Formula):
        self.formula = f
        self.cubes = [sorted(c, key=Atom.sort_key) for c in dnf(f)]

    def times(self, variables: Sequence[str], x0, rate, t0) -> list[Interval]:
        pos = {v: i for i, v in enumerate(variables)}
        out = []
        for cube in self.cubes:
            acc = Interval.everything()
            for a in cube:
                alpha = Fraction(a.const)
                beta = Fraction(0)
                for v, c in a.coeffs:
                    if v == TIME:
                        beta += c
                    else:
                        i = pos[v]
                        alpha += c * (x0[i] - t0 * rate[i])
                        beta += c * rate[i]
                got = iv.affine_interval(alpha, beta, a.strict)
                if got is None:
                    acc = None
                    break
                acc = acc & got
                if acc.empty:
                    acc = None
                    break
            if acc is not None:
                out.append(acc)
        return iv.union(out)

    def on_trajectory(self, traj: PwlTrajectory) -> list[Interval]:
        pieces = []
        for s in traj.segments:
            span = Interval(s.start_time, s.end_time, True, True)
            for piece in self.times(traj.variables, s.start_state, s.rate, s.start_time):
                pieces.append(piece & span)
        return iv.union(pieces)


def until(traj: PwlTrajectory, phi1: Formula, phi2: Formula, tau, window: Interval | None = None) -> bool:
    """``exists tau' >= tau in window: phi2(tau') and phi1 on [tau, tau']``.

    ``window`` is in absolute time; None means unbounded (within the trace).
    """
    tau = Fraction(tau)
    if tau < traj.start or tau > traj.end:
        raise HorizonError(f"time {tau} outside the trajectory")
    w = Interval(tau, None, True, False)
    if window is not None:
        w = w & window
        if w.empty:
            return False
        if w.hi is None or w.hi > traj.end:
            raise HorizonError(f"insufficient horizon: trajectory ends at {traj.end}, formula needs {w.hi}")
    s1 = LineSat(phi1).on_trajectory(traj)
    comp = iv.component(s1, tau)
    if comp is None:
        return False
    s2 = LineSat(phi2).on_trajectory(traj)
    return bool(iv.intersect(s2, [comp & w]))


def monitor(traj: PwlTrajectory, phi: StraFormula, tau=0, shifted: bool = True) -> bool:
    """Exact ``(x, tau) |= phi1 U_J phi2`` on ``traj``.

    With ``shifted`` (the default) ``J = I - tau`` clipped at zero, i.e. the
    witness must fall in absolute time ``[max(l, tau), u]``; otherwise the
    window is ``[tau + l, tau + u]``.
    """
    tau = Fraction(tau)
    if shifted:
        window = Interval(max(phi.lo, tau), phi.hi, True, True)
        if window.empty:
            return False
    else:
        window = Interval(tau + phi.lo, tau + phi.hi, True, True)
    return until(traj, phi.phi1, phi.phi2, tau, window)


def shift_time(f: Formula, tau) -> Formula:
    """``f`` with ``t`` replaced by ``t + tau`` (for re-based trajectories)."""
    return substitute_affine(f, {TIME: LinExpr.var(TIME) + Fraction(tau)})
