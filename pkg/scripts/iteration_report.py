#!/usr/bin/env python3
"""Iteration counts and per-layer timings for the bundled models.

    python3 scripts/iteration_report.py                 # every bundled model
    python3 scripts/iteration_report.py reactor --k 8   # one model, other k
    python3 scripts/iteration_report.py --json out.json
"""

import argparse
import json
import time

from straloop.modelfile import bundled, bundled_names, load_model
from straloop.synthesis import run_fixpoint


def row(name, mf, k, method):
    t0 = time.perf_counter()
    fam, part = run_fixpoint(mf.model(), mf.spec, k, method=method)
    return {
        "model": name,
        "modes": len(mf.modes),
        "dim": len(mf.variables),
        "k": k,
        "method": method,
        "fixpoint_at": fam.fixpoint_at,
        "iterations": len(fam.stats),
        "layer_seconds": [s["seconds"] for s in fam.stats],
        "max_conjuncts": max(v["conjuncts"] for s in fam.stats for v in s["sizes"].values()),
        "levels": sorted({i for (_, i), f in part.parts.items()}),
        "seconds": round(time.perf_counter() - t0, 3),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("models", nargs="*", help="bundled names or .model paths (default: all bundled)")
    p.add_argument("--k", type=int, default=None, help="override each model's switch bound")
    p.add_argument("--method", choices=["vs", "fm"], default=None)
    p.add_argument("--json", default=None, help="also write the rows here")
    args = p.parse_args()

    rows = []
    for name in args.models or bundled_names():
        mf = load_model(name) if name.endswith(".model") else bundled(name)
        rows.append(row(name, mf, mf.k if args.k is None else args.k, args.method or mf.method))

    head = f"{'model':<12}{'modes':>6}{'dim':>5}{'k':>4}{'fixpoint':>10}{'iters':>7}{'max cj':>8}{'secs':>8}"
    print(head)
    print("-" * len(head))
    for r in rows:
        fp = "-" if r["fixpoint_at"] is None else r["fixpoint_at"]
        print(f"{r['model']:<12}{r['modes']:>6}{r['dim']:>5}{r['k']:>4}{fp:>10}{r['iterations']:>7}"
              f"{r['max_conjuncts']:>8}{r['seconds']:>8.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
