#!/usr/bin/env python3
"""Dump membership grids of the state-time sets and a few controlled traces.

Output is plain CSV, ready for any plotting tool:

    python3 scripts/sample_sets.py reactor --out plots/reactor --n 81
"""

import argparse
import random
from pathlib import Path

from straloop.cli import write_samples
from straloop.modelfile import bundled, load_model
from straloop.ratset import TIME
from straloop.simcheck import sample_in, simulate
from straloop.synthesis import extract_controller, run_fixpoint


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("model", help="bundled name or .model path")
    p.add_argument("--out", default="samples")
    p.add_argument("--n", type=int, default=41, help="grid points per axis")
    p.add_argument("--traces", type=int, default=5, help="controlled traces from random initial states")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    mf = load_model(args.model) if args.model.endswith(".model") else bundled(args.model)
    fam, part = run_fixpoint(mf.model(), mf.spec, mf.k, method=mf.method)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    box = dict(mf.box)
    box.setdefault(TIME, (0, mf.spec.hi))

    for (q, i), f in sorted(fam.sets.items()):
        write_samples(out, f"X_{q}_{i}", f, (*mf.variables, TIME), box, args.n)
    for (q, i), f in sorted(part.parts.items()):
        write_samples(out, f"Init_{q}_{i}", f, mf.variables, box, args.n)

    rng = random.Random(args.seed)
    for j, x0 in enumerate(sample_in(part.union(), box, mf.variables, args.traces, rng)):
        sched = extract_controller(x0, fam, part)
        trace = simulate(fam.model, x0, sched, mf.spec.hi)
        (out / f"trace_{j}.csv").write_text(trace.to_csv())
        print(f"trace_{j}: x0={','.join(map(str, x0))} {sched}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
