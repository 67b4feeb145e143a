"""Command-line front end and batch runner: maze corpus, filtering, campaigns, reports."""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import shutil
import sys
import traceback
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import divergence as dv
from .maze import (SUBDIVISION_RANGE, WORLD_SIZE, MazeFormatError, classify_deceptiveness,
                   generate_maze, load_maze, measure, save_maze)
from .neat import serialize_genome
from .qd import AlgorithmSpec, EvolutionBudget, RunResult, SteadyStateQD, get_algorithm
from .seeding import derive_seed
from .sim import simulate

RESULT_FIELDS = ["maze", "algorithm", "run_index", "seed", "success", "evaluations", "hidden_nodes", "connections"]
CHECKPOINT_FIELDS = ["maze", "algorithm", "run_index", "evaluations", "solved"]
REPORT_FIELDS = ["file", "objective_successes", "nslc_successes", "runs", "accepted", "truncated", "error"]
METRICS = ("successes", "robustness", "evaluations", "complexity", "tournament")
Z95 = 1.96


class UsageError(ValueError):
    """Bad command-line input or config; maps to exit code 2."""


def worker_count(default: int = 1) -> int:
    raw = os.environ.get("QD_WORKERS")
    if raw is None or raw == "":
        return max(1, default)
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"QD_WORKERS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("QD_WORKERS must be >= 1")
    return n


# ---------------------------------------------------------------------------
# key=value configs
# ---------------------------------------------------------------------------

_ALG_KEYS = {"n_NS": "n_ns", "n_SS": "n_ss", "n_LC": "n_lc", "h": "h", "k_SS": "k_ss", "lambda": "lam"}
_ARCHIVE_KEYS = {
    "rho_init": ("initial_threshold", float),
    "rho_fraction": ("threshold_fraction", float),
    "rho_min": ("min_threshold", float),
    "archive_add_trigger": ("add_trigger", int),
    "archive_raise": ("raise_factor", float),
    "archive_stagnant_windows": ("stagnant_windows", int),
    "archive_lower": ("lower_factor", float),
}
_BUDGET_KEYS = {"pop": "population_size", "max_generations": "max_generations", "sim_steps": "sim_steps"}


def parse_pairs(lines: Iterable[str], source: str = "config") -> list[tuple[str, str, int]]:
    """``key=value`` lines (``#`` comments, blanks ignored) as (key, value, lineno)."""
    out = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out.append((k.strip(), v.strip(), lineno))
    return out


def _convert(key: str, value: str, kind):
    try:
        return kind(value)
    except ValueError:
        raise UsageError(f"bad value for {key}: {value!r}") from None


def _alg_param(key: str, value: str):
    if key not in _ALG_KEYS:
        raise UsageError(f"unknown algorithm parameter {key!r}")
    return _ALG_KEYS[key], _convert(key, value, float if key == "lambda" else int)


def parse_algorithm(text: str) -> AlgorithmSpec:
    """``NAME`` or ``NAME:key=value,key=value`` (keys n_NS, n_SS, n_LC, h, k_SS, lambda)."""
    name, _, rest = text.partition(":")
    name = name.strip()
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        if "=" not in item:
            raise UsageError(f"bad algorithm override {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        attr, val = _alg_param(k, v)
        params[attr] = val
    try:
        return get_algorithm(name, **params)
    except KeyError as e:
        raise UsageError(str(e.args[0])) from None
    except ValueError as e:
        raise UsageError(str(e)) from None


@dataclass
class RunConfig:
    algorithm: AlgorithmSpec
    maze: Path
    seed: int = 0
    budget: EvolutionBudget = field(default_factory=EvolutionBudget)
    archive: dv.ArchiveConfig = field(default_factory=dv.ArchiveConfig)
    run_index: int = 0
    results: Path | None = None
    checkpoints: Path | None = None
    genome_out: Path | None = None
    trace_out: Path | None = None


RUN_KEYS = ("algorithm", "maze", "seed", "run_index", "results", "checkpoints", "genome_out", "trace_out",
            *_BUDGET_KEYS, *_ALG_KEYS, *_ARCHIVE_KEYS)


def parse_run_config(pairs: Sequence[tuple[str, str]], base: Path = Path(".")) -> RunConfig:
    values: dict[str, str] = {}
    for k, v in pairs:
        if k not in RUN_KEYS:
            raise UsageError(f"unknown config key {k!r}")
        values[k] = v
    for req in ("algorithm", "maze"):
        if req not in values:
            raise UsageError(f"missing required config key {req!r}")
    alg = parse_algorithm(values["algorithm"])
    params = {}
    for k in _ALG_KEYS:
        if k in values:
            attr, val = _alg_param(k, values[k])
            params[attr] = val
    if params:
        try:
            alg = alg.with_params(**params)
        except ValueError as e:
            raise UsageError(str(e)) from None
    budget_args = {attr: _convert(k, values[k], int) for k, attr in _BUDGET_KEYS.items() if k in values}
    try:
        budget = EvolutionBudget(**budget_args)
    except ValueError as e:
        raise UsageError(str(e)) from None
    archive_args = {attr: _convert(k, values[k], kind) for k, (attr, kind) in _ARCHIVE_KEYS.items() if k in values}

    def path(key):
        return (base / values[key]) if key in values else None

    return RunConfig(
        algorithm=alg,
        maze=base / values["maze"],
        seed=_convert("seed", values.get("seed", "0"), int),
        budget=budget,
        archive=dv.ArchiveConfig(**archive_args),
        run_index=_convert("run_index", values.get("run_index", "0"), int),
        results=path("results"),
        checkpoints=path("checkpoints"),
        genome_out=path("genome_out"),
        trace_out=path("trace_out"),
    )


@dataclass
class Campaign:
    mazes: list[Path]
    algorithms: list[AlgorithmSpec]
    runs_per_pair: int = 1
    budget: EvolutionBudget = field(default_factory=EvolutionBudget)
    base_seed: int = 0
    workers: int = 1
    results: Path = Path("results.csv")
    checkpoints: Path | None = None
    genomes_dir: Path | None = None

    def __post_init__(self):
        if self.runs_per_pair < 1:
            raise UsageError("runs must be >= 1")
        if not self.mazes or not self.algorithms:
            raise UsageError("a campaign needs at least one maze and one algorithm")
        names = [maze_name(m) for m in self.mazes]
        if len(set(names)) != len(names):
            raise UsageError("maze file names must be unique within a campaign")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise UsageError("algorithm entries must be unique within a campaign")

    @property
    def checkpoint_path(self) -> Path:
        return self.checkpoints or checkpoints_for(self.results)


CAMPAIGN_KEYS = ("maze", "algorithm", "runs", "seed", "workers", "results", "checkpoints", "genomes",
                 *_BUDGET_KEYS)


def parse_campaign(text: str, base: Path = Path("."), source: str = "campaign") -> Campaign:
    mazes, algs, single = [], [], {}
    for k, v, lineno in parse_pairs(text.splitlines(), source):
        if k not in CAMPAIGN_KEYS:
            raise UsageError(f"{source}:{lineno}: unknown campaign key {k!r}")
        if k == "maze":
            mazes.append(base / v)
        elif k == "algorithm":
            algs.append(parse_algorithm(v))
        else:
            single[k] = v
    budget_args = {attr: _convert(k, single[k], int) for k, attr in _BUDGET_KEYS.items() if k in single}
    try:
        budget = EvolutionBudget(**budget_args)
    except ValueError as e:
        raise UsageError(str(e)) from None
    return Campaign(
        mazes=mazes,
        algorithms=algs,
        runs_per_pair=_convert("runs", single.get("runs", "1"), int),
        budget=budget,
        base_seed=_convert("seed", single.get("seed", "0"), int),
        workers=_convert("workers", single.get("workers", "1"), int),
        results=base / single.get("results", "results.csv"),
        checkpoints=(base / single["checkpoints"]) if "checkpoints" in single else None,
        genomes_dir=(base / single["genomes"]) if "genomes" in single else None,
    )


def load_campaign(path) -> Campaign:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise UsageError(f"cannot read campaign {path}: {e.strerror}") from None
    return parse_campaign(text, path.parent, str(path))


def checkpoints_for(results: Path) -> Path:
    results = Path(results)
    return results.with_name(results.stem + "_checkpoints.csv")


def maze_name(path) -> str:
    return Path(path).stem


def run_seed(base_seed: int, maze: str, algorithm: str, run_index: int) -> int:
    return derive_seed(base_seed, maze, algorithm, run_index)


# ---------------------------------------------------------------------------
# rows
# ---------------------------------------------------------------------------

def result_row(maze: str, result: RunResult, run_index: int) -> dict:
    return {
        "maze": maze,
        "algorithm": result.algorithm,
        "run_index": run_index,
        "seed": result.seed,
        "success": int(result.success),
        "evaluations": result.evaluations_used,
        "hidden_nodes": "" if result.hidden_nodes is None else result.hidden_nodes,
        "connections": "" if result.connections is None else result.connections,
    }


def checkpoint_rows(maze: str, result: RunResult, run_index: int) -> list[dict]:
    return [{"maze": maze, "algorithm": result.algorithm, "run_index": run_index, "evaluations": e,
             "solved": int(s)} for e, s in result.checkpoints]


def _sort_key(row: dict):
    return (row["maze"], row["algorithm"], int(row["run_index"]), int(row.get("evaluations") or 0))


def write_rows(path: Path, fields: list[str], rows: list[dict], append: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerows(rows)


def read_rows(path: Path, fields: list[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(fields) - set(reader.fieldnames or [])
        if missing:
            raise UsageError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        return list(reader)


# ---------------------------------------------------------------------------
# single runs and batches
# ---------------------------------------------------------------------------

def execute_run(cfg: RunConfig) -> RunResult:
    maze = load_maze(cfg.maze)
    engine = SteadyStateQD(maze, cfg.algorithm, cfg.budget, cfg.seed, archive_config=cfg.archive)
    result = engine.run()
    name = maze_name(cfg.maze)
    if cfg.results is not None:
        write_rows(cfg.results, RESULT_FIELDS, [result_row(name, result, cfg.run_index)], append=True)
    if cfg.checkpoints is not None:
        write_rows(cfg.checkpoints, CHECKPOINT_FIELDS, checkpoint_rows(name, result, cfg.run_index), append=True)
    if result.genome is not None:
        if cfg.genome_out is not None:
            Path(cfg.genome_out).write_text(serialize_genome(result.genome))
        if cfg.trace_out is not None:
            simulate(maze, result.genome, cfg.budget.sim_steps, trace_path=cfg.trace_out)
    return result


@dataclass(frozen=True)
class _Task:
    maze_path: str
    maze: str
    spec: AlgorithmSpec
    run_index: int
    seed: int
    budget: EvolutionBudget
    genome_path: str | None


_MAZES: dict = {}


def _run_task(task: _Task):
    try:
        maze = _MAZES.get(task.maze_path)
        if maze is None:
            maze = _MAZES[task.maze_path] = load_maze(task.maze_path)
        result = SteadyStateQD(maze, task.spec, task.budget, task.seed).run()
        if task.genome_path and result.genome is not None:
            Path(task.genome_path).write_text(serialize_genome(result.genome))
        return result_row(task.maze, result, task.run_index), checkpoint_rows(task.maze, result, task.run_index), None
    except Exception as e:  # recorded per run; the campaign carries on
        return None, [], f"{task.maze},{task.spec.label},{task.run_index}: {type(e).__name__}: {e}"


def campaign_tasks(c: Campaign) -> list[_Task]:
    tasks = []
    for path in c.mazes:
        name = maze_name(path)
        for spec in c.algorithms:
            for r in range(c.runs_per_pair):
                gpath = None
                if c.genomes_dir is not None:
                    gpath = str(Path(c.genomes_dir) / f"{name}__{spec.label}__{r}.genome")
                tasks.append(_Task(str(path), name, spec, r, run_seed(c.base_seed, name, spec.label, r),
                                   c.budget, gpath))
    return tasks


def run_campaign(c: Campaign, workers: int | None = None) -> tuple[list[dict], list[dict], list[str]]:
    """Execute every (maze, algorithm, run) triple; rows come back sorted, independent of scheduling."""
    for path in c.mazes:
        try:
            load_maze(path)
        except (OSError, MazeFormatError) as e:
            raise UsageError(f"{path}: {e}") from None
    if c.genomes_dir is not None:
        Path(c.genomes_dir).mkdir(parents=True, exist_ok=True)
    tasks = campaign_tasks(c)
    workers = workers or c.workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(min(workers, len(tasks))) as ex:
            outs = list(ex.map(_run_task, tasks, chunksize=1))
    else:
        outs = [_run_task(t) for t in tasks]
    rows = sorted((o[0] for o in outs if o[0] is not None), key=_sort_key)
    cps = sorted((r for o in outs for r in o[1]), key=_sort_key)
    faults = [o[2] for o in outs if o[2] is not None]
    return rows, cps, faults


# ---------------------------------------------------------------------------
# corpus generation and filtering
# ---------------------------------------------------------------------------

def generate_corpus(count: int, out_dir, seed: int = 0, subdivisions: tuple[int, int] = SUBDIVISION_RANGE,
                    width: float = WORLD_SIZE, height: float = WORLD_SIZE) -> list[dict]:
    lo, hi = subdivisions
    if count < 0 or lo < 0 or hi < lo:
        raise UsageError("count must be >= 0 and the subdivision range must satisfy 0 <= lo <= hi")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for i in range(count):
        k = int(np.random.default_rng(derive_seed(seed, "subdivisions", i)).integers(lo, hi + 1))
        maze = measure(generate_maze(width, height, k, derive_seed(seed, "maze", i)))
        fname = f"maze_{i:04d}.maze"
        save_maze(maze, out / fname)
        index.append({"file": fname, "subdivisions": maze.subdivisions, "astar_length": repr(maze.astar_length)})
    write_rows(out / "index.csv", ["file", "subdivisions", "astar_length"], index)
    return index


def _filter_one(args):
    path, runs, budget, seed, early_stop = args
    name = Path(path).name
    try:
        maze = load_maze(path)
        rep = classify_deceptiveness(maze, runs, budget, derive_seed(seed, "filter", Path(path).stem),
                                     early_stop=early_stop)
        return {"file": name, "objective_successes": rep.objective_successes, "nslc_successes": rep.nslc_successes,
                "runs": rep.runs, "accepted": int(rep.accepted), "truncated": int(rep.truncated), "error": ""}
    except Exception as e:
        return {"file": name, "objective_successes": "", "nslc_successes": "", "runs": runs, "accepted": 0,
                "truncated": 0, "error": f"{type(e).__name__}: {e}"}


def filter_corpus(maze_dir, out_dir, runs: int, budget: EvolutionBudget, seed: int = 0, *,
                  early_stop: bool = True, workers: int = 1, report_path=None) -> list[dict]:
    """Classify every ``*.maze`` in ``maze_dir``; copy accepted ones to ``out_dir``."""
    src = Path(maze_dir)
    files = sorted(src.glob("*.maze"))
    jobs = [(str(p), runs, budget, seed, early_stop) for p in files]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as ex:
            rows = list(ex.map(_filter_one, jobs, chunksize=1))
    else:
        rows = [_filter_one(j) for j in jobs]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for p, row in zip(files, rows):
        if row["accepted"]:
            shutil.copyfile(p, out / p.name)
    write_rows(Path(report_path) if report_path else out / "deceptiveness.csv", REPORT_FIELDS, rows)
    return rows


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def mean_ci(values: Sequence[float]) -> tuple[float, float, float]:
    """Mean and a normal-approximation 95% interval (degenerate for n < 2)."""
    n = len(values)
    if n == 0:
        return math.nan, math.nan, math.nan
    m = math.fsum(values) / n
    if n < 2:
        return m, m, m
    sd = math.sqrt(math.fsum((v - m) ** 2 for v in values) / (n - 1))
    half = Z95 * sd / math.sqrt(n)
    return m, m - half, m + half


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return f"{v:.6g}"
    return str(v)


def _table(fields: list[str], rows: list[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _ordered(values: Iterable[str]) -> list[str]:
    return sorted(set(values))


def success_counts(rows: list[dict]) -> dict[tuple[str, str], int]:
    counts: dict[tuple[str, str], int] = defaultdict(int)
    for r in rows:
        counts[(r["maze"], r["algorithm"])] += int(r["success"])
    return counts


def report_successes(rows: list[dict]) -> str:
    runs: dict = defaultdict(int)
    wins: dict = defaultdict(int)
    for r in rows:
        runs[(r["maze"], r["algorithm"])] += 1
        wins[(r["maze"], r["algorithm"])] += int(r["success"])
    out = []
    for key in sorted(runs):
        out.append([key[0], key[1], runs[key], wins[key]])
    for alg in _ordered(r["algorithm"] for r in rows):
        out.append(["ALL", alg, sum(v for k, v in runs.items() if k[1] == alg),
                    sum(v for k, v in wins.items() if k[1] == alg)])
    return _table(["maze", "algorithm", "runs", "successes"], out)


def report_evaluations(rows: list[dict]) -> str:
    # failed runs stop exactly at the evaluation cap, so their recorded count is the cap
    groups: dict = defaultdict(list)
    for r in rows:
        groups[(r["maze"], r["algorithm"])].append(float(r["evaluations"]))
        groups[("ALL", r["algorithm"])].append(float(r["evaluations"]))
    out = []
    for key in sorted(groups, key=lambda k: (k[0] == "ALL", k)):
        m, lo, hi = mean_ci(groups[key])
        out.append([key[0], key[1], len(groups[key]), m, lo, hi])
    return _table(["maze", "algorithm", "runs", "mean_evaluations", "ci95_low", "ci95_high"], out)


def report_complexity(rows: list[dict]) -> str:
    out = []
    for alg in _ordered(r["algorithm"] for r in rows):
        solved = [r for r in rows if r["algorithm"] == alg and int(r["success"])]
        hn = mean_ci([float(r["hidden_nodes"]) for r in solved])
        cn = mean_ci([float(r["connections"]) for r in solved])
        out.append([alg, len(solved), *hn, *cn])
    return _table(["algorithm", "solutions", "hidden_mean", "hidden_ci95_low", "hidden_ci95_high",
                   "connections_mean", "connections_ci95_low", "connections_ci95_high"], out)


def tournament_matrix(rows: list[dict]) -> tuple[list[str], dict[tuple[str, str], float]]:
    """% of mazes (run by both algorithms) on which the row algorithm has strictly more successes."""
    counts = success_counts(rows)
    algs = _ordered(r["algorithm"] for r in rows)
    mazes_of = defaultdict(set)
    for r in rows:
        mazes_of[r["algorithm"]].add(r["maze"])
    matrix = {}
    for a in algs:
        for b in algs:
            if a == b:
                continue
            common = sorted(mazes_of[a] & mazes_of[b])
            if not common:
                matrix[(a, b)] = math.nan
                continue
            wins = sum(counts[(m, a)] > counts[(m, b)] for m in common)
            matrix[(a, b)] = 100.0 * wins / len(common)
    return algs, matrix


def report_tournament(rows: list[dict]) -> str:
    algs, matrix = tournament_matrix(rows)
    out = []
    for a in algs:
        vals = [matrix[(a, b)] for b in algs if b != a]
        finite = [v for v in vals if not math.isnan(v)]
        avg = math.fsum(finite) / len(finite) if finite else math.nan
        out.append([a] + [("" if a == b else matrix[(a, b)]) for b in algs] + [avg])
    col = ["average"]
    for b in algs:
        finite = [matrix[(a, b)] for a in algs if a != b and not math.isnan(matrix[(a, b)])]
        col.append(math.fsum(finite) / len(finite) if finite else math.nan)
    out.append(col + [""])
    return _table(["algorithm", *algs, "average"], out)


def report_robustness(checkpoints: list[dict]) -> str:
    """Cumulative successes by evaluation checkpoint, per maze and aggregated (maze = ALL)."""
    per: dict = defaultdict(int)
    for r in checkpoints:
        e = int(r["evaluations"])
        s = int(r["solved"])
        per[(r["maze"], r["algorithm"], e)] += s
        per[("ALL", r["algorithm"], e)] += s
    out = [[m, a, e, per[(m, a, e)]] for (m, a, e) in sorted(per, key=lambda k: (k[0] == "ALL", k))]
    return _table(["maze", "algorithm", "evaluations", "successes"], out)


def build_report(metric: str, results_path, checkpoints_path=None) -> str:
    if metric not in METRICS:
        raise UsageError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
    if metric == "robustness":
        cp = Path(checkpoints_path) if checkpoints_path else checkpoints_for(Path(results_path))
        return report_robustness(read_rows(cp, CHECKPOINT_FIELDS))
    rows = read_rows(Path(results_path), RESULT_FIELDS)
    return {"successes": report_successes, "evaluations": report_evaluations,
            "complexity": report_complexity, "tournament": report_tournament}[metric](rows)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _range(text: str) -> tuple[int, int]:
    try:
        if "-" in text:
            lo, hi = text.split("-", 1)
            return int(lo), int(hi)
        v = int(text)
        return v, v
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO-HI, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mazeqd", description="Quality-diversity neuroevolution on deceptive mazes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a corpus of recursive-division mazes")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--subdivisions", type=_range, default=SUBDIVISION_RANGE, help="N or LO-HI (default 5-12)")
    g.add_argument("--size", type=float, nargs=2, default=(WORLD_SIZE, WORLD_SIZE), metavar=("W", "H"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    f = sub.add_parser("filter", help="keep mazes that defeat objective search but not NS-LC")
    f.add_argument("maze_dir")
    f.add_argument("--out", required=True)
    f.add_argument("--runs", type=int, default=50)
    f.add_argument("--pop", type=int, default=250)
    f.add_argument("--max-generations", type=int, default=600)
    f.add_argument("--sim-steps", type=int, default=300)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--workers", type=int, default=1)
    f.add_argument("--exhaustive", action="store_true", help="run every run even once the verdict is known")
    f.add_argument("--report", help="deceptiveness CSV path (default OUT/deceptiveness.csv)")

    r = sub.add_parser("run", help="one evolutionary run from key=value settings")
    r.add_argument("--config", help="file of key=value lines")
    r.add_argument("settings", nargs="*", help="key=value overrides")

    b = sub.add_parser("batch", help="execute a campaign file")
    b.add_argument("campaign")
    b.add_argument("--workers", type=int)

    rep = sub.add_parser("report", help="summarise a results CSV")
    rep.add_argument("results")
    rep.add_argument("--metric", required=True)
    rep.add_argument("--checkpoints")
    rep.add_argument("--out")
    return p


def _cmd_generate(a) -> int:
    index = generate_corpus(a.count, a.out, a.seed, a.subdivisions, a.size[0], a.size[1])
    print(f"wrote {len(index)} mazes to {a.out}")
    return 0


def _cmd_filter(a) -> int:
    if a.runs < 1:
        raise UsageError("--runs must be >= 1")
    try:
        budget = EvolutionBudget(a.pop, a.max_generations, a.sim_steps)
    except ValueError as e:
        raise UsageError(str(e)) from None
    rows = filter_corpus(a.maze_dir, a.out, a.runs, budget, a.seed, early_stop=not a.exhaustive,
                         workers=worker_count(a.workers), report_path=a.report)
    accepted = sum(int(r["accepted"]) for r in rows)
    errors = sum(bool(r["error"]) for r in rows)
    print(f"accepted {accepted} of {len(rows)} mazes ({errors} errors)")
    return 1 if errors else 0


def _cmd_run(a) -> int:
    lines = []
    base = Path(".")
    if a.config:
        try:
            lines = Path(a.config).read_text().splitlines()
        except OSError as e:
            raise UsageError(f"cannot read config {a.config}: {e.strerror}") from None
        base = Path(a.config).parent
    pairs = [(k, v) for k, v, _ in parse_pairs(lines, a.config or "config")]
    pairs += [(k, v) for k, v, _ in parse_pairs(a.settings, "argument")]
    cfg = parse_run_config(pairs, base)
    if not cfg.maze.exists():
        raise UsageError(f"maze file not found: {cfg.maze}")
    result = execute_run(cfg)
    row = result_row(maze_name(cfg.maze), result, cfg.run_index)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RESULT_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerow(row)
    sys.stdout.write(buf.getvalue())
    return 0


def _cmd_batch(a) -> int:
    c = load_campaign(a.campaign)
    workers = worker_count(a.workers or c.workers)
    rows, cps, faults = run_campaign(c, workers)
    write_rows(c.results, RESULT_FIELDS, rows)
    write_rows(c.checkpoint_path, CHECKPOINT_FIELDS, cps)
    for f in faults:
        print(f"run fault: {f}", file=sys.stderr)
    print(f"wrote {len(rows)} result rows to {c.results}")
    return 1 if faults else 0


def _cmd_report(a) -> int:
    text = build_report(a.metric, a.results, a.checkpoints)
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return {"generate": _cmd_generate, "filter": _cmd_filter, "run": _cmd_run, "batch": _cmd_batch,
                "report": _cmd_report}[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (OSError, MazeFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
