#!/usr/bin/env python3
"""Run NS, NS-LC and NSS-LC on a few accepted mazes and write every report.

Writes OUT/results.csv, OUT/results_checkpoints.csv, OUT/<metric>.csv and OUT/config.json.
"""

import argparse
import json
import time
from pathlib import Path

from mazeqd.harness import (CHECKPOINT_FIELDS, METRICS, RESULT_FIELDS, Campaign, build_report, parse_algorithm,
                            run_campaign, worker_count, write_rows)
from mazeqd.qd import EvolutionBudget


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--accepted", default="results/pool/accepted")
    ap.add_argument("--out", default="results/compare")
    ap.add_argument("--mazes", type=int, default=3)
    ap.add_argument("--algorithms", nargs="+", default=["NS", "NS-LC", "NSS-LC"])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--pop", type=int, default=250)
    ap.add_argument("--max-generations", type=int, default=300)
    ap.add_argument("--sim-steps", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    a = ap.parse_args()

    mazes = sorted(Path(a.accepted).glob("*.maze"))[: a.mazes]
    if len(mazes) < a.mazes:
        raise SystemExit(f"need {a.mazes} accepted mazes in {a.accepted}, found {len(mazes)}")
    out = Path(a.out)
    c = Campaign(mazes, [parse_algorithm(s) for s in a.algorithms], a.runs,
                 EvolutionBudget(a.pop, a.max_generations, a.sim_steps), a.seed, results=out / "results.csv")
    t0 = time.time()
    rows, cps, faults = run_campaign(c, worker_count(a.workers or 1))
    write_rows(c.results, RESULT_FIELDS, rows)
    write_rows(c.checkpoint_path, CHECKPOINT_FIELDS, cps)
    for metric in METRICS:
        (out / f"{metric}.csv").write_text(build_report(metric, c.results))
    cfg = {"mazes": [p.name for p in mazes], "algorithms": a.algorithms, "runs": a.runs, "pop": a.pop,
           "max_generations": a.max_generations, "sim_steps": a.sim_steps, "seed": a.seed,
           "faults": faults, "seconds": round(time.time() - t0, 1)}
    (out / "config.json").write_text(json.dumps(cfg, indent=2) + "\n")
    print((out / "successes.csv").read_text())


if __name__ == "__main__":
    main()
