"""Command line front end: ``straloop synth|controller|automaton|check <model>``."""

from __future__ import annotations

import argparse
import csv
import json
import random
import re
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .hastruct import AutomatonOut, GuardTable, resolve_and_assemble
from .modelfile import AutomatonBlocks, ModelFile, load_model, parse_number
from .ratset import FALSE, TIME, Formula, holds, to_text
from .simcheck import BlockingError, brute_force_min_switches, closed_loop_run, grid_points, sample_in, simulate
from .strl import monitor
from .syntax import ParseError, parse_formula
from .synthesis import InitPartition, NotSynthesizable, StateTimeFamily, extract_controller, run_fixpoint

EXIT_OK, EXIT_ERROR, EXIT_UNSYNTH, EXIT_INCOMPLETE = 0, 1, 2, 3

_BLOCK = re.compile(r"^\[(set|part) ([A-Za-z][A-Za-z0-9_]*) (\d+)\]$")


# --- artifact files ----------------------------------------------------------

def sets_text(fam: StateTimeFamily) -> str:
    out = []
    for q in fam.model.names:
        for i in range(fam.depth + 1):
            out += [f"[set {q} {i}]", to_text(fam.sets[(q, i)]), ""]
    return "\n".join(out)


def partition_text(part: InitPartition, names: Sequence[str]) -> str:
    out = []
    for q in names:
        for (m, i), f in sorted(part.parts.items(), key=lambda kv: kv[0][1]):
            if m == q:
                out += [f"[part {q} {i}]", to_text(f), ""]
    return "\n".join(out)


def read_blocks(text: str, variables: set[str]) -> dict[tuple[str, str, int], Formula]:
    """Parse ``sets.txt`` / ``init.txt`` back into formulas."""
    got: dict[tuple[str, str, int], Formula] = {}
    head = None
    for no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        m = _BLOCK.match(line.strip())
        if m:
            head = (m.group(1), m.group(2), int(m.group(3)))
            continue
        if head is None:
            raise ParseError("formula outside a block", no, 1)
        got[head] = parse_formula(line, variables, line=no)
        head = None
    return got


def report(fam: StateTimeFamily, mf: ModelFile, stem: str) -> dict:
    return {
        "model": stem,
        "label": mf.label,
        "k": fam.k,
        "method": mf.method,
        "modes": len(fam.model.modes),
        "dim": fam.model.dim,
        "fixpoint_at": fam.fixpoint_at,
        "depth": fam.depth,
        "iterations": fam.stats,
        "total_seconds": round(sum(s["seconds"] for s in fam.stats), 6),
    }


def write_samples(out: Path, name: str, f: Formula, variables: Sequence[str], box: dict, n: int) -> Path:
    """Membership of ``f`` on an ``n``-per-axis grid over ``box`` as CSV."""
    missing = [v for v in variables if v not in box]
    if missing:
        raise ValueError(f"box has no range for {', '.join(missing)} (add it to [options] box)")
    path = out / f"{name}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*variables, "member"])
        for p in grid_points(box, variables, n):
            w.writerow([*(str(x) for x in p), int(holds(f, dict(zip(variables, p))))])
    return path


def _box_with_time(mf: ModelFile) -> dict:
    box = dict(mf.box)
    box.setdefault(TIME, (Fraction(0), mf.spec.hi))
    return box


# --- commands ----------------------------------------------------------------

def _load(args) -> ModelFile:
    mf = load_model(args.model)
    if args.k is not None:
        mf.k = args.k
    if getattr(args, "grid", None) is not None:
        mf.grid = parse_number(args.grid)
    return mf


def _synthesize(mf: ModelFile):
    return run_fixpoint(mf.model(), mf.spec, mf.k, method=mf.method)


def cmd_synth(args) -> int:
    mf = _load(args)
    fam, part = _synthesize(mf)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.model).stem
    (out / "sets.txt").write_text(sets_text(fam))
    (out / "init.txt").write_text(partition_text(part, fam.model.names))
    (out / "report.json").write_text(json.dumps(report(fam, mf, stem), indent=2, sort_keys=True) + "\n")
    if args.samples:
        sdir = out / "samples"
        sdir.mkdir(exist_ok=True)
        box = _box_with_time(mf)
        for (q, i), f in sorted(fam.sets.items(), key=lambda kv: (fam.model.names.index(kv[0][0]), kv[0][1])):
            write_samples(sdir, f"X_{q}_{i}", f, (*mf.variables, TIME), box, args.samples)
        for (q, i), f in part.parts.items():
            write_samples(sdir, f"Init_{q}_{i}", f, mf.variables, box, args.samples)
    fp = "none" if fam.fixpoint_at is None else fam.fixpoint_at
    print(f"{stem}: {len(fam.model.modes)} modes, depth {fam.depth}, fixpoint_at {fp}")
    return EXIT_OK


def _parse_x0(text: str, dim: int) -> tuple[Fraction, ...]:
    vals = tuple(parse_number(v) for v in text.split(","))
    if len(vals) != dim:
        raise ValueError(f"--x0 needs {dim} comma-separated values, got {len(vals)}")
    return vals


def cmd_controller(args) -> int:
    mf = _load(args)
    if args.x0 is None:
        raise ValueError("--x0 is required")
    x0 = _parse_x0(args.x0, len(mf.variables))
    fam, part = _synthesize(mf)
    try:
        sched = extract_controller(x0, fam, part)
    except NotSynthesizable as exc:
        print(f"unsynthesizable: {exc}", file=sys.stderr)
        return EXIT_UNSYNTH
    print(sched)
    if args.simulate:
        trace = simulate(fam.model, x0, sched, mf.spec.hi)
        sys.stdout.write(trace.to_csv())
        print(f"monitor: {str(monitor(trace.trajectory, mf.spec)).lower()}")
    return EXIT_OK


def build_automaton(mf: ModelFile, fam=None, part=None):
    if fam is None:
        fam, part = _synthesize(mf)
    return resolve_and_assemble(mf.model(), fam, part, mf.spec, init=mf.inits or None,
                                retry_budget=mf.retry_budget)


def cmd_automaton(args) -> int:
    mf = _load(args)
    if mf.edges is None:
        print("error: edges required (add an [edges] section)", file=sys.stderr)
        return EXIT_INCOMPLETE
    aut = build_automaton(mf)
    mf.automaton = AutomatonBlocks(
        init={q: aut.init[q] for q in mf.model().names},
        guards={e: aut.guards.guards[e] for e in mf.model().edge_list() if e in aut.guards.guards},
        domains={q: aut.domains[q] for q in mf.model().names},
        complete=aut.complete,
        unresolved=list(aut.unresolved),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.model).stem
    path = out / f"{stem}.automaton.model"
    path.write_text(mf.to_text())
    for (a, b), g in mf.automaton.guards.items():
        print(f"G({a},{b}) = {to_text(g)}")
    for q, d in mf.automaton.domains.items():
        print(f"Dom({q}) = {to_text(d)}")
    if args.samples:
        sdir = out / "samples"
        sdir.mkdir(exist_ok=True)
        a = mf.automaton
        for q, f in a.init.items():
            write_samples(sdir, f"init_{q}", f, mf.variables, mf.box, args.samples)
        for (x, y), f in a.guards.items():
            write_samples(sdir, f"guard_{x}_{y}", f, mf.variables, mf.box, args.samples)
        for q, f in a.domains.items():
            write_samples(sdir, f"domain_{q}", f, mf.variables, mf.box, args.samples)
    if not aut.complete:
        pending = ", ".join(f"{x}->{y}" for x, y in aut.unresolved)
        print(f"incomplete: unresolved edges {pending}; partial file {path}", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


def cmd_check(args) -> int:
    """Sample Init and verify controllers (and the automaton, if present)."""
    mf = _load(args)
    model = mf.model()
    fam, part = _synthesize(mf)
    rng = random.Random(0)
    n = args.samples or 50
    if not mf.box:
        raise ValueError("check needs a box in [options] to sample initial states")
    pts = sample_in(part.union(), mf.box, mf.variables, n, rng)
    failures = 0
    for x0 in pts:
        sched = extract_controller(x0, fam, part)
        trace = simulate(model, x0, sched, mf.spec.hi)
        if not monitor(trace.trajectory, mf.spec):
            failures += 1
            print(f"FAIL controller x0={','.join(map(str, x0))} {sched}")
        elif args.grid is not None:
            l = part.level(x0)
            if l and brute_force_min_switches(model, x0, mf.spec, l - 1, mf.grid) is not None:
                failures += 1
                print(f"FAIL minimality x0={','.join(map(str, x0))} level {l}")
    print(f"controllers: {len(pts) - failures}/{len(pts)} sampled initial states pass")
    aut = None
    if mf.automaton is not None:
        a = mf.automaton
        aut = AutomatonOut(a.init, GuardTable(guards=dict(a.guards)), a.domains, a.complete, list(a.unresolved))
    elif mf.edges is not None and args.closed_loop:
        aut = build_automaton(mf, fam, part)
    if aut is not None:
        bad = 0
        runs = 0
        for q in model.names:
            for x0 in sample_in(aut.init.get(q, FALSE), mf.box, mf.variables, 10, rng):
                for seed in range(args.seeds):
                    runs += 1
                    try:
                        tr = closed_loop_run(aut, model, x0, seed, mf.spec.hi, mode=q)
                    except BlockingError as exc:
                        bad += 1
                        print(f"FAIL blocking x0={','.join(map(str, x0))} mode {q}: {exc}")
                        continue
                    if not monitor(tr.trajectory, mf.spec):
                        bad += 1
                        print(f"FAIL closed loop x0={','.join(map(str, x0))} mode {q} seed {seed}")
        print(f"closed loop: {runs - bad}/{runs} runs pass")
        failures += bad
    return EXIT_OK if failures == 0 else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="straloop", description="Switching controllers for reach-avoid until specs.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in [
        ("synth", cmd_synth, "compute the state-time sets and the initial partition"),
        ("controller", cmd_controller, "print the switching schedule for one initial state"),
        ("automaton", cmd_automaton, "synthesize guards and domains over the model's edges"),
        ("check", cmd_check, "sample initial states and verify the synthesized controllers"),
    ]:
        s = sub.add_parser(name, help=helptext)
        s.add_argument("model", help="path to a .model file")
        s.add_argument("--k", type=int, default=None, help="switch bound (overrides [options] k)")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--samples", type=int, default=0, help="grid points per axis for membership CSVs")
        s.add_argument("--grid", default=None, help="oracle time grid p/q (check: enables the minimality probe)")
        s.set_defaults(func=fn)
        if name == "controller":
            s.add_argument("--x0", default=None, help="initial state, comma-separated rationals")
            s.add_argument("--simulate", action="store_true", help="append the trace CSV and monitor verdict")
        if name == "check":
            s.add_argument("--seeds", type=int, default=20, help="closed-loop seeds per initial state")
            s.add_argument("--closed-loop", action="store_true", help="also assemble and run the automaton")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"{args.model}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
