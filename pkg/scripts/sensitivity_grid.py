#!/usr/bin/env python3
"""Sweep n_LC for NS-LC and lambda for NSS-LC on accepted mazes.

The grid follows n_LC in {5, 10, 15, 20} and lambda in {0.4, ..., 0.8}.
Budgets default to a quick desk run; raise them for a fuller sweep.
"""

import argparse
from pathlib import Path

from mazeqd.harness import (CHECKPOINT_FIELDS, RESULT_FIELDS, Campaign, build_report, parse_algorithm, run_campaign,
                            worker_count, write_rows)
from mazeqd.qd import EvolutionBudget

N_LC = (5, 10, 15, 20)
LAMBDAS = (0.4, 0.5, 0.6, 0.7, 0.8)


def grid():
    algs = [f"NS-LC:n_LC={k}" for k in N_LC]
    algs += [f"NSS-LC:lambda={lam},n_LC={k}" for lam in LAMBDAS for k in N_LC]
    return [parse_algorithm(s) for s in algs]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--accepted", default="results/pool/accepted")
    ap.add_argument("--out", default="results/sensitivity")
    ap.add_argument("--mazes", type=int, default=3)
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--pop", type=int, default=100)
    ap.add_argument("--max-generations", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    a = ap.parse_args()

    mazes = sorted(Path(a.accepted).glob("*.maze"))[: a.mazes]
    if not mazes:
        raise SystemExit(f"no accepted mazes in {a.accepted}")
    out = Path(a.out)
    c = Campaign(mazes, grid(), a.runs, EvolutionBudget(a.pop, a.max_generations, 300), a.seed,
                 results=out / "results.csv")
    rows, cps, faults = run_campaign(c, worker_count(a.workers or 1))
    write_rows(c.results, RESULT_FIELDS, rows)
    write_rows(c.checkpoint_path, CHECKPOINT_FIELDS, cps)
    text = build_report("successes", c.results)
    (out / "successes.csv").write_text(text)
    print(text)
    for f in faults:
        print("fault:", f)


if __name__ == "__main__":
    main()
