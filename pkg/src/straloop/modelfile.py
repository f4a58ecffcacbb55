"""Line-oriented model files.

Example::

    # tank level controlled by one valve
    [vars]
    h

    [mode q1]
    rate = 1
    init = 0 <= h <= 3

    [mode q2]
    rate = -1

    [edges]
    q1 -> q2
    q2 -> q1

    [spec]
    (0 <= h <= 4) U[3,4] (3 <= h <= 5)

    [options]
    k = 5

Sections may repeat only for ``[mode <id>]`` (one per mode).  Synthesized
automata add ``[automaton]``, ``[init <id>]``, ``[guard <a> -> <b>]`` and
``[domain <id>]`` blocks whose bodies are formulas.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .ratset import TIME, Formula, to_text
from .strl import StraFormula
from .syntax import ParseError, parse_formula, parse_spec
from .synthesis import Mode, SwitchedModel

_NUM = re.compile(r"^[+-]?\d+(?:\.\d+)?(?:/\d+)?$")
_IDENT = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_HEADER = re.compile(r"^\[\s*([a-z]+)\s*(.*?)\s*\]$")
_BOX = re.compile(r"^([A-Za-z][A-Za-z0-9_]*)\s*:\s*(\S+?)\s*\.\.\s*(\S+)$")

MODE_KEYS = {"rate", "init"}
OPTION_KEYS = {"k", "retry_budget", "grid", "method", "box", "label", "samples"}
AUTOMATON_KEYS = {"status", "unresolved"}


def parse_number(text: str, line: int = 0, col: int = 0) -> Fraction:
    s = text.strip()
    if not _NUM.match(s):
        raise ParseError(f"not an exact rational: {s!r} (use p/q or a finite decimal)", line, col)
    num, _, den = s.partition("/")
    value = Fraction(num)
    if den:
        if int(den) == 0:
            raise ParseError("division by zero", line, col)
        value /= int(den)
    return value


@dataclass
class AutomatonBlocks:
    init: dict[str, Formula] = field(default_factory=dict)
    guards: dict[tuple[str, str], Formula] = field(default_factory=dict)
    domains: dict[str, Formula] = field(default_factory=dict)
    complete: bool = True
    unresolved: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class ModelFile:
    variables: tuple[str, ...]
    modes: list[Mode]
    spec_text: str
    spec: StraFormula
    edges: Optional[list[tuple[str, str]]] = None
    inits: dict[str, Formula] = field(default_factory=dict)
    k: int = 5
    retry_budget: int = 3
    grid: Fraction = Fraction(1, 16)
    method: str = "vs"
    samples: int = 0
    box: dict[str, tuple[Fraction, Fraction]] = field(default_factory=dict)
    label: str = ""
    automaton: Optional[AutomatonBlocks] = None

    def model(self) -> SwitchedModel:
        edges = None if self.edges is None else tuple(self.edges)
        return SwitchedModel(self.variables, tuple(self.modes), edges)

    def to_text(self) -> str:
        out = ["[vars]", ", ".join(self.variables), ""]
        for m in self.modes:
            out.append(f"[mode {m.name}]")
            out.append("rate = " + ", ".join(str(r) for r in m.rate))
            if m.name in self.inits:
                out.append(f"init = {to_text(self.inits[m.name])}")
            out.append("")
        if self.edges is not None:
            out.append("[edges]")
            out.extend(f"{a} -> {b}" for a, b in self.edges)
            out.append("")
        out += ["[spec]", str(self.spec), ""]
        out.append("[options]")
        out.append(f"k = {self.k}")
        out.append(f"retry_budget = {self.retry_budget}")
        out.append(f"grid = {self.grid}")
        out.append(f"method = {self.method}")
        if self.samples:
            out.append(f"samples = {self.samples}")
        if self.box:
            out.append("box = " + ", ".join(f"{v}:{lo}..{hi}" for v, (lo, hi) in self.box.items()))
        if self.label:
            out.append(f"label = {self.label}")
        out.append("")
        if self.automaton is not None:
            a = self.automaton
            out.append("[automaton]")
            out.append(f"status = {'complete' if a.complete else 'incomplete'}")
            if a.unresolved:
                out.append("unresolved = " + ", ".join(f"{x}->{y}" for x, y in a.unresolved))
            out.append("")
            for q, f in a.init.items():
                out += [f"[init {q}]", to_text(f), ""]
            for (x, y), f in a.guards.items():
                out += [f"[guard {x} -> {y}]", to_text(f), ""]
            for q, f in a.domains.items():
                out += [f"[domain {q}]", to_text(f), ""]
        return "\n".join(out).rstrip("\n") + "\n"


def _edge(text: str, line: int) -> tuple[str, str]:
    parts = [p.strip() for p in text.split("->")]
    if len(parts) != 2 or not all(_IDENT.match(p) for p in parts):
        raise ParseError(f"malformed edge {text!r}, expected 'a -> b'", line, 1)
    return parts[0], parts[1]


def parse_model(text: str) -> ModelFile:
    sections: list[tuple[str, str, int, list[tuple[int, str]]]] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = _HEADER.match(line.strip())
        if m:
            sections.append((m.group(1), m.group(2), no, []))
            continue
        if not sections:
            raise ParseError("content before the first section header", no, 1)
        sections[-1][3].append((no, line))

    variables: Optional[tuple[str, ...]] = None
    modes: list[Mode] = []
    inits_text: dict[str, tuple[int, int, str]] = {}
    edges: Optional[list[tuple[str, str]]] = None
    spec: Optional[tuple[int, str]] = None
    opts: dict[str, tuple[int, str]] = {}
    auto_kv: dict[str, tuple[int, str]] = {}
    blocks: dict[tuple[str, str], tuple[int, str]] = {}
    seen: set[tuple[str, str]] = set()

    for kind, arg, no, body in sections:
        key = (kind, arg)
        if key in seen:
            raise ParseError(f"duplicate section [{kind}{' ' + arg if arg else ''}]", no, 1)
        seen.add(key)
        if kind == "vars":
            names = [v.strip() for _, ln in body for v in ln.split(",") if v.strip()]
            for v in names:
                if not _IDENT.match(v):
                    raise ParseError(f"bad variable name {v!r}", no, 1)
                if v == TIME:
                    raise ParseError("'t' is reserved for time", no, 1)
            if not names:
                raise ParseError("no state variables declared", no, 1)
            variables = tuple(names)
        elif kind == "mode":
            if not _IDENT.match(arg):
                raise ParseError(f"bad mode name {arg!r}", no, 1)
            kv = _key_values(body, MODE_KEYS, f"mode {arg}")
            if "rate" not in kv:
                raise ParseError(f"mode {arg} has no rate", no, 1)
            lno, rate_text = kv["rate"]
            rate = tuple(parse_number(x, lno, 1) for x in rate_text.split(","))
            modes.append(Mode(arg, rate))
            if "init" in kv:
                lno, itext = kv["init"]
                inits_text[arg] = (lno, itext)
        elif kind == "edges":
            edges = [_edge(ln.strip(), lno) for lno, ln in body]
        elif kind == "spec":
            if not body:
                raise ParseError("empty [spec] section", no, 1)
            spec = (body[0][0], " ".join(ln.strip() for _, ln in body))
        elif kind == "options":
            opts = _key_values(body, OPTION_KEYS, "options")
        elif kind == "automaton":
            auto_kv = _key_values(body, AUTOMATON_KEYS, "automaton")
        elif kind in ("init", "guard", "domain"):
            if not body:
                raise ParseError(f"empty [{kind} {arg}] block", no, 1)
            blocks[(kind, arg)] = (body[0][0], " ".join(ln.strip() for _, ln in body))
        else:
            raise ParseError(f"unknown section [{kind}]", no, 1)

    if variables is None:
        raise ParseError("missing [vars] section", 1, 1)
    if not modes:
        raise ParseError("a model needs at least one [mode <id>] section", 1, 1)
    if spec is None:
        raise ParseError("missing [spec] section", 1, 1)
    allowed = set(variables) | {TIME}
    phi1, phi2, lo, hi = parse_spec(spec[1], allowed, line=spec[0])
    mf = ModelFile(variables, modes, spec[1], StraFormula(phi1, phi2, lo, hi), edges)
    state_vars = set(variables)
    for q, (lno, itext) in inits_text.items():
        mf.inits[q] = parse_formula(itext, state_vars, line=lno)
    for key, (lno, val) in opts.items():
        if key in ("k", "retry_budget", "samples"):
            if not val.isdigit():
                raise ParseError(f"{key} must be a non-negative integer", lno, 1)
            setattr(mf, key, int(val))
        elif key == "grid":
            mf.grid = parse_number(val, lno, 1)
            if mf.grid <= 0:
                raise ParseError("grid must be positive", lno, 1)
        elif key == "method":
            if val not in ("vs", "fm"):
                raise ParseError("method must be 'vs' or 'fm'", lno, 1)
            mf.method = val
        elif key == "box":
            for item in val.split(","):
                m = _BOX.match(item.strip())
                if not m or m.group(1) not in allowed:
                    raise ParseError(f"bad box entry {item.strip()!r}, expected 'var:lo..hi'", lno, 1)
                mf.box[m.group(1)] = (parse_number(m.group(2), lno, 1), parse_number(m.group(3), lno, 1))
        elif key == "label":
            mf.label = val
    if auto_kv or blocks:
        a = AutomatonBlocks()
        status = auto_kv.get("status", (0, "complete"))
        if status[1] not in ("complete", "incomplete"):
            raise ParseError("status must be complete or incomplete", status[0], 1)
        a.complete = status[1] == "complete"
        if "unresolved" in auto_kv:
            lno, val = auto_kv["unresolved"]
            a.unresolved = [_edge(x.strip(), lno) for x in val.split(",") if x.strip()]
        for (kind, arg), (lno, body) in blocks.items():
            f = parse_formula(body, state_vars, line=lno)
            if kind == "init":
                a.init[arg] = f
            elif kind == "domain":
                a.domains[arg] = f
            else:
                a.guards[_edge(arg, lno)] = f
        mf.automaton = a
    try:
        mf.model()
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from None
    return mf


def _key_values(body, allowed: set[str], where: str) -> dict[str, tuple[int, str]]:
    out: dict[str, tuple[int, str]] = {}
    for lno, ln in body:
        key, eq, val = ln.partition("=")
        key = key.strip()
        if not eq:
            raise ParseError(f"expected 'key = value' in [{where}]", lno, 1)
        if key not in allowed:
            raise ParseError(f"unknown key {key!r} in [{where}]", lno, 1)
        if key in out:
            raise ParseError(f"duplicate key {key!r} in [{where}]", lno, 1)
        out[key] = (lno, val.strip())
    return out


def load_model(path: str | Path) -> ModelFile:
    return parse_model(Path(path).read_text())


BUNDLED = Path(__file__).parent / "models"


def bundled(name: str) -> ModelFile:
    """A model shipped with the package, e.g. ``bundled("reactor")``."""
    return load_model(BUNDLED / f"{name}.model")


def bundled_names() -> list[str]:
    return sorted(p.stem for p in BUNDLED.glob("*.model"))
