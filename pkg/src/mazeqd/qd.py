"""Steady-state quality-diversity engine and the algorithm roster.

Every algorithm is a list of maximised score dimensions drawn from
``objective`` (negated distance to goal), ``novelty``, ``surprise``,
``nss`` (novelty/surprise blend) and ``lc`` (local competition).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from numba import njit

from . import divergence as dv
from .divergence import knn_mean
from .maze import Maze
from .neat import (Genome, InnovationRegistry, NeatConfig, crossover, initial_genome, mutate)
from .pareto import crowding_distance, dominance_matrix, pareto_ranks, replacement_kernel
from .sim import DEFAULT_ROBOT, RobotConfig, simulate

CHECKPOINT_EVERY = 1000


PARAM_NAMES = {"n_ns": "n_NS", "n_ss": "n_SS", "n_lc": "n_LC", "h": "h", "k_ss": "k_SS", "lam": "lambda"}


@dataclass(frozen=True)
class AlgorithmSpec:
    id: str
    objectives: tuple[str, ...]
    uses_archive: bool = False
    lc_uses_archive: bool = True
    surprise_uses_archive: bool = False
    n_ns: int = 15
    n_ss: int = 2
    n_lc: int = 5
    h: int = 2
    k_ss: int = 200
    lam: float = 0.7
    overrides: tuple[tuple[str, object], ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if min(self.n_ns, self.n_ss, self.n_lc, self.h, self.k_ss) < 1:
            raise ValueError("neighbour counts, h and k_SS must be positive")

    @property
    def dims(self) -> int:
        return len(self.objectives)

    @property
    def uses_surprise(self) -> bool:
        return "surprise" in self.objectives or "nss" in self.objectives

    @property
    def uses_novelty(self) -> bool:
        return self.uses_archive or "novelty" in self.objectives or "nss" in self.objectives

    @property
    def label(self) -> str:
        if not self.overrides:
            return self.id
        return self.id + "[" + ";".join(f"{PARAM_NAMES[k]}={v}" for k, v in self.overrides) + "]"

    def with_params(self, **params) -> "AlgorithmSpec":
        bad = set(params) - set(PARAM_NAMES)
        if bad:
            raise KeyError(f"unknown algorithm parameter(s): {', '.join(sorted(bad))}")
        merged = dict(self.overrides)
        merged.update(params)
        return replace(self, overrides=tuple(sorted(merged.items())), **params)


def _roster() -> dict[str, AlgorithmSpec]:
    specs = [
        AlgorithmSpec("OBJ", ("objective",)),
        AlgorithmSpec("NS", ("novelty",), uses_archive=True),
        AlgorithmSpec("SS", ("surprise",)),
        AlgorithmSpec("NSS", ("nss",), uses_archive=True, lam=0.4),
        AlgorithmSpec("NS-SS", ("novelty", "surprise"), uses_archive=True),
        AlgorithmSpec("NS-LC", ("novelty", "lc"), uses_archive=True, n_lc=5),
        AlgorithmSpec("SS-LC", ("surprise", "lc"), lc_uses_archive=False, n_lc=10),
        AlgorithmSpec("NSS-LC", ("nss", "lc"), uses_archive=True, n_lc=5, lam=0.7),
        AlgorithmSpec("NS-SS-LC", ("novelty", "surprise", "lc"), uses_archive=True, n_lc=5),
        AlgorithmSpec("SSA-LC", ("surprise", "lc"), uses_archive=True, surprise_uses_archive=True, n_lc=5),
    ]
    return {s.id: s for s in specs}


ALGORITHMS = _roster()


def get_algorithm(name: str, **params) -> AlgorithmSpec:
    try:
        spec = ALGORITHMS[name]
    except KeyError:
        raise KeyError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}") from None
    return spec.with_params(**params) if params else spec


@dataclass(frozen=True)
class EvolutionBudget:
    population_size: int = 250
    max_generations: int = 600
    sim_steps: int = 300

    def __post_init__(self):
        if min(self.population_size, self.max_generations, self.sim_steps) < 1:
            raise ValueError("budget entries must be positive")

    @property
    def cap(self) -> int:
        return self.population_size * self.max_generations


REFERENCE_BUDGET = EvolutionBudget(250, 600, 300)


@dataclass
class Individual:
    genome: Genome
    behavior: tuple[float, float]
    f: float
    uid: int
    scores: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rank: int = 0
    crowding: float = 0.0


@dataclass
class RunResult:
    success: bool
    evaluations_used: int
    seed: int
    cap: int
    hidden_nodes: Optional[int] = None
    connections: Optional[int] = None
    genome: Optional[Genome] = None
    algorithm: str = ""

    @property
    def checkpoints(self) -> list[tuple[int, bool]]:
        """(evaluations, solved-by-then) every ``CHECKPOINT_EVERY`` evaluations up to the cap."""
        marks = list(range(CHECKPOINT_EVERY, self.cap + 1, CHECKPOINT_EVERY))
        if not marks or marks[-1] != self.cap:
            marks.append(self.cap)
        return [(e, self.success and self.evaluations_used <= e) for e in marks]


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

@dataclass
class ScoringContext:
    """Snapshot an individual is scored against; ``behaviors``/``objectives`` exclude it."""

    behaviors: np.ndarray
    objectives: np.ndarray
    archive: Optional[dv.NoveltyArchive] = None
    model: Optional[dv.SurpriseModel] = None


_CODES = {"objective": 0, "novelty": 1, "surprise": 2, "nss": 3, "lc": 4}


@njit(cache=True)
def lc_kernel(tx, ty, f, A, FA, skip, B, FB, k, dbuf, fbuf):
    """Count of the ``k`` nearest pool rows (``A`` minus ``skip``, then ``B``) with larger f.

    Equal distances keep pool order, so earlier rows win ties.
    """
    if k <= 0:
        return 0
    m = 0
    na = A.shape[0]
    for r in range(na + B.shape[0]):
        if r == skip:
            continue
        if r < na:
            dx = A[r, 0] - tx
            dy = A[r, 1] - ty
            fv = FA[r]
        else:
            dx = B[r - na, 0] - tx
            dy = B[r - na, 1] - ty
            fv = FB[r - na]
        d = math.sqrt(dx * dx + dy * dy)
        if m == k:
            if d >= dbuf[m - 1]:
                continue
            j = m - 1
        else:
            j = m
            m += 1
        while j > 0 and dbuf[j - 1] > d:
            dbuf[j] = dbuf[j - 1]
            fbuf[j] = fbuf[j - 1]
            j -= 1
        dbuf[j] = d
        fbuf[j] = fv
    c = 0
    for j in range(m):
        if fbuf[j] > f:
            c += 1
    return c


@njit(cache=True)
def score_kernel(tx, ty, f, skip, B, F, AP, AF, P, has_model, codes, n_ns, n_ss, n_lc, lam,
                 lc_arch, ss_arch, need_novelty, out, buf, fbuf):
    """Fill ``out`` with the score vector of (tx, ty, f); returns the novelty (0 if unused)."""
    n = 0.0
    if need_novelty:
        n = knn_mean(tx, ty, B, skip, AP, n_ns, buf)
    s = 0.0
    if has_model:
        if ss_arch:
            s = knn_mean(tx, ty, P, -1, AP, n_ss, buf)
        else:
            s = knn_mean(tx, ty, P, -1, AP[:0], n_ss, buf)
    for i in range(codes.shape[0]):
        c = codes[i]
        if c == 0:
            out[i] = -f
        elif c == 1:
            out[i] = n
        elif c == 2:
            out[i] = s
        elif c == 3:
            out[i] = lam * n + (1.0 - lam) * s
        else:
            if lc_arch:
                out[i] = lc_kernel(tx, ty, f, B, F, skip, AP, AF, n_lc, buf, fbuf)
            else:
                out[i] = lc_kernel(tx, ty, f, B, F, skip, AP[:0], AF[:0], n_lc, buf, fbuf)
    return n


@njit(cache=True)
def score_all_kernel(B, F, AP, AF, P, has_model, codes, n_ns, n_ss, n_lc, lam,
                     lc_arch, ss_arch, need_novelty, S, buf, fbuf):
    for i in range(B.shape[0]):
        score_kernel(B[i, 0], B[i, 1], F[i], i, B, F, AP, AF, P, has_model, codes, n_ns, n_ss, n_lc, lam,
                     lc_arch, ss_arch, need_novelty, S[i], buf, fbuf)


def local_competition(behavior, f: float, pool_behaviors, pool_objectives, n_lc: int) -> int:
    """How many of the ``n_lc`` behavioural nearest neighbours have a strictly larger ``f``.

    Distance ties are broken by pool position.
    """
    pts = np.ascontiguousarray(np.asarray(pool_behaviors, dtype=float).reshape(-1, 2))
    fs = np.ascontiguousarray(np.asarray(pool_objectives, dtype=float).reshape(-1))
    if len(pts) == 0 or n_lc <= 0:
        return 0
    k = int(n_lc)
    return int(lc_kernel(float(behavior[0]), float(behavior[1]), float(f), pts, fs, -1, dv._EMPTY, np.zeros(0),
                         k, np.empty(k), np.empty(k)))


class _Scorer:
    """Array-level view of an AlgorithmSpec for the scoring kernels."""

    def __init__(self, spec: AlgorithmSpec):
        self.spec = spec
        self.codes = np.array([_CODES[o] for o in spec.objectives], dtype=np.int64)
        k = max(spec.n_ns, spec.n_ss, spec.n_lc, 1)
        self.buf = np.empty(k)
        self.fbuf = np.empty(k)

    def _pools(self, archive, model):
        spec = self.spec
        if archive is not None and spec.uses_archive and len(archive):
            AP, AF = archive.points(), archive.objective_array()
        else:
            AP, AF = dv._EMPTY, np.zeros(0)
        P = model.predictions if model is not None else dv._EMPTY
        return AP, AF, P

    def one(self, behavior, f, B, F, archive, model, skip: int = -1) -> tuple[np.ndarray, float]:
        spec = self.spec
        AP, AF, P = self._pools(archive, model)
        out = np.empty(spec.dims)
        nov = score_kernel(float(behavior[0]), float(behavior[1]), float(f), skip, B, F, AP, AF, P,
                           model is not None and spec.uses_surprise, self.codes, spec.n_ns, spec.n_ss, spec.n_lc,
                           float(spec.lam), spec.lc_uses_archive, spec.surprise_uses_archive, spec.uses_novelty,
                           out, self.buf, self.fbuf)
        return out, nov

    def all(self, B, F, archive, model) -> np.ndarray:
        spec = self.spec
        AP, AF, P = self._pools(archive, model)
        S = np.empty((len(B), spec.dims))
        score_all_kernel(B, F, AP, AF, P, model is not None and spec.uses_surprise, self.codes, spec.n_ns,
                         spec.n_ss, spec.n_lc, float(spec.lam), spec.lc_uses_archive, spec.surprise_uses_archive,
                         spec.uses_novelty, S, self.buf, self.fbuf)
        return S


def score_vector(spec: AlgorithmSpec, behavior, f: float, ctx: ScoringContext) -> np.ndarray:
    if not 0.0 <= spec.lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {spec.lam}")
    B = np.ascontiguousarray(np.asarray(ctx.behaviors, dtype=float).reshape(-1, 2))
    F = np.ascontiguousarray(np.asarray(ctx.objectives, dtype=float).reshape(-1))
    vec, _ = _Scorer(spec).one(behavior, f, B, F, ctx.archive, ctx.model)
    if vec.shape != (spec.dims,):
        raise AssertionError("score vector has the wrong dimension")
    return vec


def evaluate(ind: Individual, spec: AlgorithmSpec, ctx: ScoringContext) -> Individual:
    ind.scores = score_vector(spec, ind.behavior, ind.f, ctx)
    return ind


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------

Observer = Callable[[str, "SteadyStateQD"], None]


class SteadyStateQD:
    """One evolutionary run: one offspring per step, fronts kept current.

    Every ``N`` offspring the surprise model is refit from the last two
    population snapshots and the whole population is re-scored from stored
    behaviours (no re-simulation).
    """

    def __init__(self, maze: Maze, spec: AlgorithmSpec, budget: EvolutionBudget, seed: int = 0,
                 neat_config: NeatConfig | None = None, archive_config: dv.ArchiveConfig | None = None,
                 robot: RobotConfig = DEFAULT_ROBOT, observer: Observer | None = None):
        if spec.h != 2:
            raise ValueError("only a two-snapshot history (h=2) is supported")
        self.maze = maze
        self.spec = spec
        self.budget = budget
        self.seed = seed
        self.neat = neat_config or NeatConfig()
        self.robot = robot
        self.observer = observer
        self.rng = np.random.default_rng(seed)
        self._scorer = _Scorer(spec)
        self.registry = InnovationRegistry()
        self.archive = dv.NoveltyArchive.for_world(maze.diagonal, archive_config) if spec.uses_archive else None
        self.model: dv.SurpriseModel | None = None
        self.models: list[dv.SurpriseModel] = []
        self.snapshots: deque = deque(maxlen=spec.h)
        self.population: list[Individual] = []
        self.evaluations = 0
        self.offspring = 0
        self._next_uid = 0
        self.solution: Individual | None = None

    # -- helpers -----------------------------------------------------------
    def _emit(self, event: str) -> None:
        if self.observer is not None:
            self._sync()
            self.observer(event, self)

    def _simulate(self, genome: Genome) -> Individual:
        out = simulate(self.maze, genome, self.budget.sim_steps, self.robot)
        self.evaluations += 1
        ind = Individual(genome, out.final_position, out.objective, self._next_uid)
        self._next_uid += 1
        if out.success and self.solution is None:
            self.solution = ind
        return ind

    def _arrays(self):
        B = np.array([p.behavior for p in self.population], dtype=float).reshape(-1, 2)
        F = np.array([p.f for p in self.population], dtype=float)
        return B, F

    def _reevaluate(self) -> None:
        B, F = self._arrays()
        n, d = len(B), self.spec.dims
        self._B, self._F = B, F
        self._Sbuf = np.zeros((n + 1, d))
        self._S = self._Sbuf[:n]
        self._S[:] = self._scorer.all(B, F, self.archive, self.model)
        for ind, row in zip(self.population, self._S):
            ind.scores = row.copy()
        self._Dbuf = np.zeros((n + 1, n + 1), dtype=bool)
        self._D = self._Dbuf[:n, :n]
        if d > 1:
            self._D[:] = dominance_matrix(self._S)
        self._rank = pareto_ranks(self._S, self._D if d > 1 else None)
        self._crowd = crowding_distance(self._S, self._rank)

    def _sync(self) -> None:
        for i, p in enumerate(self.population):
            p.rank = int(self._rank[i])
            p.crowding = float(self._crowd[i])

    def _better(self, i: int, j: int) -> int:
        """+1 if i beats j on (rank, crowding), -1 if j beats i, 0 on a tie."""
        ri, rj = self._rank[i], self._rank[j]
        if ri != rj:
            return 1 if ri < rj else -1
        ci, cj = self._crowd[i], self._crowd[j]
        if ci != cj:
            return 1 if ci > cj else -1
        return 0

    def tournament(self) -> int:
        i, j = (int(v) for v in self.rng.integers(len(self.population), size=2))
        c = self._better(i, j)
        if c == 0:
            return i if self.rng.random() < 0.5 else j
        return i if c > 0 else j

    def make_offspring(self) -> Genome:
        a = self.tournament()
        if self.rng.random() < self.neat.crossover_prob:
            b = self.tournament()
            c = self._better(a, b)
            fitter = "a" if c > 0 else "b" if c < 0 else None
            child = crossover(self.population[a].genome, self.population[b].genome, self.rng, fitter)
        else:
            child = self.population[a].genome
        return mutate(child, self.registry, self.neat, self.rng)

    def _insert(self, child: Individual) -> bool:
        """Add ``child`` then drop the worst of N+1; returns True if the child stayed."""
        n = len(self.population)
        self._Sbuf[n] = child.scores
        victim, rank1 = replacement_kernel(self._Sbuf, self._Dbuf, self.spec.dims > 1)
        if victim == n:
            return False
        self.population[victim] = child
        self._Sbuf[victim] = child.scores
        self._B[victim] = child.behavior
        self._F[victim] = child.f
        D = self._Dbuf
        D[victim, :n] = D[n, :n]
        D[:n, victim] = D[:n, n]
        D[victim, victim] = False
        # removing a worst-front member cannot change anyone else's rank
        rank1[victim] = rank1[n]
        self._rank = rank1[:n]
        self._crowd = crowding_distance(self._S, self._rank)
        return True

    def _window(self) -> None:
        self.snapshots.append(self._B.copy())
        if self.archive is not None:
            self.archive.end_window()
        if self.spec.uses_surprise and len(self.snapshots) == self.spec.h:
            kseed = int(self.rng.integers(2**63))
            self.model = dv.update_surprise_model(self.snapshots[0], self.snapshots[1], self.spec.k_ss, kseed)
            self.models.append(self.model)
            self._emit("model")
        self._reevaluate()
        self._emit("window")

    # -- main loop -----------------------------------------------------------
    def run(self) -> RunResult:
        N = self.budget.population_size
        cap = self.budget.cap
        for _ in range(N):
            self.population.append(self._simulate(initial_genome(self.registry, self.rng, self.neat)))
            if self.solution is not None:
                return self._result()
        self._B, self._F = self._arrays()
        self.snapshots.append(self._B.copy())
        self._reevaluate()
        self._emit("init")
        while self.evaluations < cap:
            child = self._simulate(self.make_offspring())
            if self.solution is not None:
                break
            child.scores, nov = self._scorer.one(child.behavior, child.f, self._B, self._F, self.archive, self.model)
            if self.archive is not None:
                self.archive.consider(child.behavior, nov, child.f)
            self._insert(child)
            self.offspring += 1
            self._emit("offspring")
            if self.offspring % N == 0:
                self._window()
        return self._result()

    def _result(self) -> RunResult:
        sol = self.solution
        return RunResult(
            success=sol is not None,
            evaluations_used=self.evaluations,
            seed=self.seed,
            cap=self.budget.cap,
            hidden_nodes=sol.genome.hidden_nodes if sol else None,
            connections=sol.genome.enabled_connections if sol else None,
            genome=sol.genome if sol else None,
            algorithm=self.spec.label,
        )


def steady_state_run(maze: Maze, spec: AlgorithmSpec | str, budget: EvolutionBudget = REFERENCE_BUDGET,
                     seed: int = 0, **kwargs) -> RunResult:
    if isinstance(spec, str):
        spec = get_algorithm(spec)
    return SteadyStateQD(maze, spec, budget, seed, **kwargs).run()
