#!/usr/bin/env python3
"""Generate a maze corpus and keep the deceptive ones, at desk-sized budgets.

Writes OUT/candidates/, OUT/accepted/ (with deceptiveness.csv) and OUT/config.json.
"""

import argparse
import json
import time
from pathlib import Path

from mazeqd.harness import filter_corpus, generate_corpus, worker_count
from mazeqd.qd import EvolutionBudget


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/desk")
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--pop", type=int, default=100)
    ap.add_argument("--max-generations", type=int, default=150)
    ap.add_argument("--sim-steps", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    a = ap.parse_args()

    out = Path(a.out)
    cfg = {"count": a.count, "subdivisions": [5, 12], "runs": a.runs, "pop": a.pop,
           "max_generations": a.max_generations, "sim_steps": a.sim_steps, "seed": a.seed}
    t0 = time.time()
    generate_corpus(a.count, out / "candidates", a.seed)
    rows = filter_corpus(out / "candidates", out / "accepted", a.runs,
                         EvolutionBudget(a.pop, a.max_generations, a.sim_steps), a.seed,
                         workers=worker_count(a.workers or 1))
    cfg["seconds"] = round(time.time() - t0, 1)
    cfg["accepted"] = sorted(r["file"] for r in rows if int(r["accepted"]))
    (out / "config.json").write_text(json.dumps(cfg, indent=2) + "\n")
    print(f"accepted {len(cfg['accepted'])} of {len(rows)} in {cfg['seconds']} s")


if __name__ == "__main__":
    main()
