from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from straloop.modelfile import ParseError, bundled, bundled_names, parse_model, parse_number
from straloop.ratset import equivalent

BASE = """\
[vars]
h

[mode q1]
rate = 1
init = 0 <= h <= 3

[mode q2]
rate = -1

[spec]
(0 <= h <= 4) U[3,4] (3 <= h <= 5)
"""


def with_section(extra):
    return BASE + "\n" + extra


class TestNumbers:
    @pytest.mark.parametrize("text,want", [("3", 3), ("-1/4", F(-1, 4)), ("0.125", F(1, 8)), ("+2", 2)])
    def test_exact(self, text, want):
        assert parse_number(text) == want

    @pytest.mark.parametrize("text", ["1e3", "0.3(3)", "1/0", "abc", "1.", ".5"])
    def test_rejected(self, text):
        with pytest.raises(ParseError):
            parse_number(text)


class TestParse:
    def test_base(self):
        mf = parse_model(BASE)
        assert mf.variables == ("h",)
        assert [m.name for m in mf.modes] == ["q1", "q2"]
        assert mf.edges is None and mf.k == 5 and mf.method == "vs"
        assert mf.model().edge_list() == [("q1", "q2"), ("q2", "q1")]

    def test_options(self):
        mf = parse_model(with_section("[options]\nk = 7\ngrid = 1/8\nmethod = fm\nbox = h:-1..6, t:0..5\n"))
        assert (mf.k, mf.grid, mf.method) == (7, F(1, 8), "fm")
        assert mf.box == {"h": (-1, 6), "t": (0, 5)}

    def test_multiline_spec(self):
        text = BASE.replace("(0 <= h <= 4) U[3,4] (3 <= h <= 5)", "(0 <= h <= 4)\n  U[3,4]\n  (3 <= h <= 5)")
        assert parse_model(text).spec.hi == 4

    def test_comments(self):
        mf = parse_model("# header\n" + BASE.replace("rate = 1", "rate = 1  # fill"))
        assert mf.modes[0].rate == (1,)

    @pytest.mark.parametrize("text,line", [
        (with_section("[options]\nspeed = 3\n"), 15),
        (with_section("[mode q1]\nrate = 2\n"), 14),
        (with_section("[bogus]\n"), 14),
        (with_section("[edges]\nq1 -> q3\n"), 1),
        (with_section("[edges]\nq1 q2\n"), 15),
        (with_section("[options]\nk = -1\n"), 15),
        (with_section("[options]\nmethod = cad\n"), 15),
        (BASE.replace("rate = -1", "rate = 1, 2"), 1),
        (BASE.replace("[vars]\nh", "[vars]\nt"), 1),
        (BASE.replace("init = 0 <= h <= 3", "init = 0 <= x <= 3"), 6),
    ])
    def test_errors_carry_lines(self, text, line):
        with pytest.raises(ParseError) as info:
            parse_model(text)
        assert info.value.line == line

    def test_zero_modes(self):
        with pytest.raises(ParseError, match="at least one"):
            parse_model("[vars]\nh\n[spec]\ntrue U[0,1] true\n")

    def test_missing_spec(self):
        with pytest.raises(ParseError, match="spec"):
            parse_model("[vars]\nh\n[mode a]\nrate = 1\n")

    def test_nested_until_in_spec(self):
        with pytest.raises(ParseError):
            parse_model(BASE.replace("(3 <= h <= 5)", "(h >= 0 U[0,1] h >= 1)"))


class TestRoundTrip:
    @pytest.mark.parametrize("name", bundled_names())
    def test_bundled(self, name):
        mf = bundled(name)
        again = parse_model(mf.to_text())
        assert again.to_text() == mf.to_text()
        assert again.variables == mf.variables and again.modes == mf.modes
        assert equivalent(again.spec.phi1, mf.spec.phi1) and equivalent(again.spec.phi2, mf.spec.phi2)

    def test_automaton_blocks(self):
        text = with_section(
            "[automaton]\nstatus = incomplete\nunresolved = q2->q1\n\n"
            "[init q1]\n0 <= h <= 3\n\n[guard q1 -> q2]\nh >= 4 & h <= 4\n\n[domain q1]\nh <= 4\n")
        mf = parse_model(text)
        a = mf.automaton
        assert not a.complete and a.unresolved == [("q2", "q1")]
        assert set(a.guards) == {("q1", "q2")}
        assert parse_model(mf.to_text()).to_text() == mf.to_text()

    def test_bad_status(self):
        with pytest.raises(ParseError):
            parse_model(with_section("[automaton]\nstatus = done\n"))


@given(st.lists(st.tuples(st.integers(-40, 40), st.sampled_from([1, 2, 3, 4, 8])), min_size=1, max_size=3),
       st.integers(0, 9))
def test_rates_round_trip(rates, k):
    names = [f"x{i}" for i in range(len(rates))]
    rate = ", ".join(f"{n}/{d}" for n, d in rates)
    text = f"[vars]\n{', '.join(names)}\n[mode a]\nrate = {rate}\n[spec]\ntrue U[0,1] x0 >= 0\n[options]\nk = {k}\n"
    mf = parse_model(text)
    assert mf.modes[0].rate == tuple(F(n, d) for n, d in rates)
    assert parse_model(mf.to_text()).to_text() == mf.to_text()
