from fractions import Fraction as F

import pytest
from hypothesis import assume, given, strategies as st

from _oracles import until_oracle
from _strategies import formulas, rationals
from straloop.intervals import Interval
from straloop.ratset import FALSE, TRUE, disj, equivalent
from straloop.strl import (
    HorizonError,
    LineSat,
    PwlTrajectory,
    Segment,
    StraFormula,
    monitor,
    parse,
    shift_time,
    until,
)
from straloop.syntax import NestedTemporalError, NonlinearError, ParseError, parse_formula

REACTOR = "(0 <= h <= 4) U[3,4] (3 <= h <= 5)"


def line(x0, rate, end, start=0, names=("h",)):
    return PwlTrajectory(names, (Segment(F(start), tuple(map(F, x0)), tuple(map(F, rate)), F(end)),))


def piecewise(x0, pieces, names=("h",)):
    """``pieces`` is a list of (rate, end_time)."""
    segs, now, x = [], F(0), tuple(map(F, x0))
    for rate, end in pieces:
        s = Segment(now, x, tuple(map(F, rate)), F(end))
        segs.append(s)
        x, now = s.state_at(end), F(end)
    return PwlTrajectory(names, tuple(segs))


class TestParse:
    def test_reactor(self):
        phi = parse(REACTOR, {"h"})
        assert isinstance(phi, StraFormula)
        assert (phi.lo, phi.hi) == (3, 4)
        assert equivalent(phi.phi1, parse_formula("h >= 0 & h <= 4"))

    def test_plain_formula(self):
        f = parse("h > 1 | t <= 2", {"h", "t"})
        assert not isinstance(f, StraFormula)

    def test_true_false(self):
        phi = parse("true U[0,1] false")
        assert phi.phi1 == TRUE and phi.phi2 == FALSE

    def test_rational_window(self):
        phi = parse("h >= 0 U[1/2, 7/3] h >= 1", {"h"})
        assert (phi.lo, phi.hi) == (F(1, 2), F(7, 3))

    def test_nested_until(self):
        with pytest.raises(NestedTemporalError):
            parse("(h >= 0 U[0,1] h >= 1) U[0,2] h >= 2", {"h"})
        with pytest.raises(NestedTemporalError):
            parse_formula("h >= 0 U[0,1] h >= 1", {"h"})

    def test_bad_window(self):
        with pytest.raises(ValueError):
            parse("h >= 0 U[3,2] h >= 1", {"h"})

    def test_unknown_variable(self):
        with pytest.raises(ParseError, match="x"):
            parse("x >= 0 U[0,1] h >= 1", {"h"})

    def test_decimal_accepted(self):
        assert equivalent(parse_formula("h <= 0.25", {"h"}), parse_formula("h <= 1/4", {"h"}))

    @pytest.mark.parametrize("text", ["h <= 0.3(3)", "h <= 0.33.", "h <= 1.2.3"])
    def test_non_terminating_decimal(self, text):
        with pytest.raises(ParseError):
            parse_formula(text, {"h"})

    def test_error_position(self):
        with pytest.raises(ParseError) as info:
            parse_formula("h >= 1 &\n  h <= $", {"h"})
        assert (info.value.line, info.value.col) == (2, 8)

    def test_nonlinear(self):
        with pytest.raises(NonlinearError):
            parse_formula("h * h >= 1", {"h"})

    def test_str_reparses(self):
        phi = parse(REACTOR, {"h"})
        again = parse(str(phi), {"h"})
        assert equivalent(again.phi1, phi.phi1) and equivalent(again.phi2, phi.phi2)


class TestMonitor:
    phi = parse(REACTOR, {"h"})

    def test_half_in_q1(self):
        assert monitor(line([F(1, 2)], [1], 5), self.phi)

    def test_three_in_q1(self):
        # h leaves [0,4] at t=1, before the window opens
        assert not monitor(line([3], [1], 5), self.phi)

    def test_three_with_switch(self):
        traj = piecewise([3], [([-1], 1), ([1], 5)])
        assert monitor(traj, self.phi)
        assert until_oracle(traj, self.phi.phi1, self.phi.phi2, 0, 3, 4)

    def test_five_never(self):
        # phi1 already fails at t=0
        assert not monitor(line([5], [-1], 5), self.phi)

    def test_horizon(self):
        with pytest.raises(HorizonError):
            monitor(line([F(1, 2)], [1], 2), self.phi)

    def test_point_window(self):
        phi = parse("true U[2,2] h >= 2", {"h"})
        assert monitor(line([0], [1], 3), phi)
        assert not monitor(line([0], [1], 3), parse("true U[2,2] h > 2", {"h"}))

    def test_strict_boundary(self):
        # phi1 = h < 1 fails exactly at t = 1 when phi2 starts
        assert not monitor(line([0], [1], 3), parse("h < 1 U[0,3] h >= 1", {"h"}))
        assert monitor(line([0], [1], 3), parse("h <= 1 U[0,3] h >= 1", {"h"}))

    def test_linesat_times(self):
        got = LineSat(parse_formula("1 <= h < 3", {"h"})).times(("h",), (F(0),), (F(2),), F(0))
        assert got == [Interval(F(1, 2), F(3, 2), True, False)]

    def test_traj_validation(self):
        with pytest.raises(ValueError):
            PwlTrajectory(("h",), (Segment(F(0), (F(0),), (F(1),), F(1)), Segment(F(1), (F(2),), (F(1),), F(2))))


# --- properties ----------------------------------------------------------------

NAMES = ("x", "t")


@st.composite
def trajectories(draw, end=6):
    x0 = draw(rationals(-3, 3))
    cuts = sorted(set(draw(st.lists(st.integers(1, 4 * end - 1), max_size=3))))
    times = [F(0)] + [F(c, 4) for c in cuts] + [F(end)]
    segs, x = [], x0
    for a, b in zip(times, times[1:]):
        r = draw(rationals(-2, 2))
        s = Segment(a, (x,), (r,), b)
        segs.append(s)
        x = s.state_at(b)[0]
    return PwlTrajectory(("x",), tuple(segs))


windows = st.tuples(st.integers(0, 16), st.integers(0, 16)).map(lambda p: (F(min(p), 4), F(max(p), 4)))


@given(trajectories(), formulas(NAMES, max_atoms=4), formulas(NAMES, max_atoms=4), windows)
def test_until_vs_oracle(traj, f1, f2, w):
    lo, hi = w
    got = until(traj, f1, f2, 0, Interval(lo, hi, True, True))
    assert got == until_oracle(traj, f1, f2, 0, lo, hi)


@given(trajectories(), formulas(NAMES, max_atoms=4), formulas(NAMES, max_atoms=4), windows,
       st.integers(0, 8))
def test_time_shift_coherence(traj, f1, f2, w, k):
    tau = F(k, 4)
    phi = StraFormula(f1, f2, *w)
    shifted = StraFormula(shift_time(f1, tau), shift_time(f2, tau), *w)
    assume(tau + w[1] <= traj.end)
    assert monitor(traj, phi, tau, shifted=False) == monitor(traj.rebase(tau), shifted, 0)


@given(trajectories(), formulas(NAMES, max_atoms=4), formulas(NAMES, max_atoms=4), windows,
       formulas(NAMES, max_atoms=2), formulas(NAMES, max_atoms=2), st.integers(0, 4))
def test_weakening_monotone(traj, f1, f2, w, g1, g2, widen):
    phi = StraFormula(f1, f2, *w)
    lo, hi = w
    wider = StraFormula(disj(f1, g1), disj(f2, g2), max(F(0), lo - F(widen, 4)), min(F(6), hi + F(widen, 4)))
    if monitor(traj, phi):
        assert monitor(traj, wider)
