#!/usr/bin/env python3
"""Long-running threshold data collection with checkpointed CSV output.

Runs Monte Carlo logical-error-rate sweeps for one experiment family and
appends results in chunks so interrupted runs resume where they stopped.

    python3 tools/run_thresholds.py point 5 --out results/point_d5.csv

CSV rows: family,d,p,start,shots,failures,seconds.  The per-shot RNG
streams are derived from (seed, shot index), so resumed runs produce the
same data as uninterrupted ones.
"""
import argparse
import csv
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from tndecode.codes import surface_code_3d
from tndecode.harness import (
    ContractionConfig,
    CssSectorProblem,
    CubicDepolarizingProblem,
    _decide,
    sample_errors,
)

FAMILIES = {
    # name: (ps, chi_peps, chi_split, chi_mps)
    "point": ([0.029, 0.030, 0.031, 0.032, 0.033], 24, 8, 32),
    "loop": ([0.210, 0.215, 0.220, 0.225, 0.230, 0.235], 24, 8, 48),
    "depol": ([0.062, 0.064, 0.066, 0.068, 0.070, 0.072, 0.074], 20, 4, 64),
}


def make_problem(family, code, p):
    if family == "point":
        return CssSectorProblem(code, "z", p, "detector")
    if family == "loop":
        # high flip rate: the generator picture is the low-entropy dual and
        # converges at much smaller bond dimension than the detector picture
        return CssSectorProblem(code, "x", p, "generator", ports="classes")
    if family == "depol":
        return CubicDepolarizingProblem(code, p)
    raise ValueError(family)


def done_shots(path):
    done = {}
    if os.path.exists(path):
        with open(path) as f:
            for row in csv.reader(f):
                if not row or row[0] == "family":
                    continue
                p = float(row[2])
                done[p] = done.get(p, 0) + int(row[4])
    return done


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("family", choices=sorted(FAMILIES))
    ap.add_argument("d", type=int)
    ap.add_argument("--shots", type=int, default=10000)
    ap.add_argument("--chunk", type=int, default=200)
    ap.add_argument("--seed-base", type=int, default=20260800)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    ps, chi_peps, chi_split, chi_mps = FAMILIES[args.family]
    config = ContractionConfig(
        engine="sweep", chi_peps=chi_peps, chi_split=chi_split, chi_mps=chi_mps
    )
    code = surface_code_3d(args.d)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    if not os.path.exists(args.out):
        with open(args.out, "w", newline="") as f:
            csv.writer(f).writerow(
                ["family", "d", "p", "start", "shots", "failures", "seconds"]
            )
    done = done_shots(args.out)
    for idx, p in enumerate(ps):
        seed = args.seed_base + 100 * args.d + idx
        problem = make_problem(args.family, code, p)
        start = done.get(round(p, 6), 0)
        while start < args.shots:
            n = min(args.chunk, args.shots - start)
            t0 = time.time()
            fails = 0
            for true_cls, m in sample_errors(problem, n, seed, start=start):
                if _decide(problem, m, config) != true_cls:
                    fails += 1
            dt = time.time() - t0
            with open(args.out, "a", newline="") as f:
                csv.writer(f).writerow(
                    [args.family, args.d, p, start, n, fails, f"{dt:.1f}"]
                )
            start += n
            print(
                f"{args.family} d={args.d} p={p}: {start}/{args.shots} "
                f"(+{fails} fails, {dt:.1f}s)",
                flush=True,
            )
    print(f"{args.family} d={args.d} complete")


if __name__ == "__main__":
    main()
