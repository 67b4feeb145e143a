"""Novelty, surprise and their blend, all over 2-D behaviors (final positions).

Neighbour means are correctly rounded sums (``math.fsum`` semantics) over the
exact k nearest distances, so results do not depend on the order in which
the neighbours were visited.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    return arr.reshape(-1, 2)


def distances(target, points) -> np.ndarray:
    pts = _as_points(points)
    dx = pts[:, 0] - target[0]
    dy = pts[:, 1] - target[1]
    return np.sqrt(dx * dx + dy * dy)


def mean_nearest(d: np.ndarray, k: int) -> float:
    """Mean of the ``k`` smallest entries of ``d`` (all of them if fewer)."""
    n = len(d)
    if n == 0 or k <= 0:
        return 0.0
    if n > k:
        d = np.partition(d, k - 1)[:k]
    return math.fsum(d.tolist()) / len(d)


@njit(cache=True)
def fsum_kernel(x, n):
    """Shewchuk summation of ``x[:n]``, rounded like ``math.fsum``."""
    p = np.empty(n + 1)
    m = 0
    for i in range(n):
        v = x[i]
        j = 0
        for q in range(m):
            y = p[q]
            if abs(v) < abs(y):
                v, y = y, v
            hi = v + y
            lo = y - (hi - v)
            if lo != 0.0:
                p[j] = lo
                j += 1
            v = hi
        p[j] = v
        m = j + 1
    if m == 0:
        return 0.0
    m -= 1
    hi = p[m]
    lo = 0.0
    while m > 0:
        xx = hi
        m -= 1
        y = p[m]
        hi = xx + y
        yr = hi - xx
        lo = y - yr
        if lo != 0.0:
            break
    if m > 0 and ((lo < 0.0 and p[m - 1] < 0.0) or (lo > 0.0 and p[m - 1] > 0.0)):
        y = lo * 2.0
        xx = hi + y
        yr = xx - hi
        if y == yr:
            hi = xx
    return hi


@njit(cache=True)
def push_smallest(buf, m, k, v):
    """Insert ``v`` into the ascending buffer ``buf[:m]`` capped at ``k``; returns the new size."""
    if m == k:
        if v >= buf[m - 1]:
            return m
        j = m - 1
    else:
        j = m
        m += 1
    while j > 0 and buf[j - 1] > v:
        buf[j] = buf[j - 1]
        j -= 1
    buf[j] = v
    return m


@njit(cache=True)
def knn_mean(tx, ty, A, skip, B, k, buf):
    """Mean distance from (tx, ty) to its ``k`` nearest rows of ``A`` (row ``skip`` excluded) and ``B``."""
    if k <= 0:
        return 0.0
    m = 0
    for i in range(A.shape[0]):
        if i == skip:
            continue
        dx = A[i, 0] - tx
        dy = A[i, 1] - ty
        m = push_smallest(buf, m, k, math.sqrt(dx * dx + dy * dy))
    for i in range(B.shape[0]):
        dx = B[i, 0] - tx
        dy = B[i, 1] - ty
        m = push_smallest(buf, m, k, math.sqrt(dx * dx + dy * dy))
    if m == 0:
        return 0.0
    return fsum_kernel(buf, m) / m


# ---------------------------------------------------------------------------
# novelty
# ---------------------------------------------------------------------------

@dataclass
class ArchiveConfig:
    initial_threshold: float | None = None
    threshold_fraction: float = 0.1
    min_threshold: float = 0.5
    add_trigger: int = 4
    raise_factor: float = 1.2
    stagnant_windows: int = 4
    lower_factor: float = 0.8


@dataclass
class NoveltyArchive:
    """Append-only behaviour store with a fluctuating entry threshold ``rho``."""

    threshold: float
    config: ArchiveConfig = field(default_factory=ArchiveConfig)
    behaviors: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    adds_in_window: int = 0
    stagnant: int = 0
    _buf: np.ndarray = field(default_factory=lambda: np.zeros((64, 3)), repr=False, compare=False)
    _synced: int = field(default=0, repr=False, compare=False)

    @classmethod
    def for_world(cls, diagonal: float, config: ArchiveConfig | None = None) -> "NoveltyArchive":
        config = config or ArchiveConfig()
        rho = config.initial_threshold if config.initial_threshold is not None else config.threshold_fraction * diagonal
        return cls(threshold=max(rho, config.min_threshold), config=config)

    def __len__(self) -> int:
        return len(self.behaviors)

    def _table(self) -> np.ndarray:
        """Rows of (x, y, f), extended incrementally from the append-only lists."""
        n = len(self.behaviors)
        if self._synced != n:
            if len(self._buf) < n:
                grown = np.zeros((max(2 * len(self._buf), n), 3))
                grown[: self._synced] = self._buf[: self._synced]
                self._buf = grown
            for i in range(self._synced, n):
                self._buf[i, :2] = self.behaviors[i]
                self._buf[i, 2] = self.objectives[i]
            self._synced = n
        return self._buf[:n]

    def points(self) -> np.ndarray:
        return self._table()[:, :2]

    def objective_array(self) -> np.ndarray:
        return self._table()[:, 2]

    def consider(self, behavior, novelty: float, objective: float = math.nan) -> bool:
        if novelty > self.threshold:
            self.behaviors.append((float(behavior[0]), float(behavior[1])))
            self.objectives.append(float(objective))
            self.adds_in_window += 1
            return True
        return False

    def end_window(self) -> None:
        """Adapt ``rho`` at a window boundary (every N offspring)."""
        c = self.config
        if self.adds_in_window > c.add_trigger:
            self.threshold *= c.raise_factor
        if self.adds_in_window == 0:
            self.stagnant += 1
            if self.stagnant >= c.stagnant_windows:
                self.threshold = max(self.threshold * c.lower_factor, c.min_threshold)
                self.stagnant = 0
        else:
            self.stagnant = 0
        self.adds_in_window = 0


def consider_for_archive(archive: NoveltyArchive, behavior, novelty: float, objective: float = math.nan) -> NoveltyArchive:
    archive.consider(behavior, novelty, objective)
    return archive


_EMPTY = np.zeros((0, 2))


def novelty_score(target, population, archive: NoveltyArchive | None = None, n_ns: int = 15) -> float:
    """Mean distance to the ``n_ns`` nearest behaviours in population and archive.

    ``population`` must already exclude ``target`` itself.
    """
    pts = _as_points(population)
    extra = archive.points() if archive is not None and len(archive) else _EMPTY
    return knn_mean(float(target[0]), float(target[1]), pts, -1, extra, int(n_ns), np.empty(max(int(n_ns), 1)))


def novelty_scores_all(population, archive: NoveltyArchive | None = None, n_ns: int = 15) -> np.ndarray:
    """Novelty of every population member against the others plus the archive."""
    pop = np.ascontiguousarray(_as_points(population))
    extra = archive.points() if archive is not None and len(archive) else _EMPTY
    buf = np.empty(max(int(n_ns), 1))
    return np.array([knn_mean(pop[i, 0], pop[i, 1], pop, i, extra, int(n_ns), buf) for i in range(len(pop))])


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    dx = a[:, None, 0] - b[None, :, 0]
    dy = a[:, None, 1] - b[None, :, 1]
    return np.sqrt(dx * dx + dy * dy)


# ---------------------------------------------------------------------------
# surprise
# ---------------------------------------------------------------------------

def kmeans(points, k: int, init=None, max_iters: int = 50, tol: float = 1e-6) -> np.ndarray:
    """Lloyd's algorithm.

    ``init`` is either a ``(k, 2)`` array of starting centroids or a seed used
    to pick ``k`` distinct points. An emptied cluster is re-seeded with the
    point farthest from its current centroid.
    """
    pts = np.ascontiguousarray(_as_points(points))
    n = len(pts)
    if n == 0:
        raise ValueError("kmeans needs at least one point")
    if isinstance(init, np.ndarray) and init.ndim == 2:
        centroids = np.ascontiguousarray(init, dtype=float).copy()
    else:
        k = max(1, min(int(k), n))
        rng = np.random.default_rng(init)
        centroids = pts[np.sort(rng.choice(n, size=k, replace=False))].copy()
    _lloyd(pts, centroids, int(max_iters), float(tol))
    return centroids


@njit(cache=True)
def _lloyd(pts, centroids, max_iters, tol):
    n = pts.shape[0]
    k = centroids.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    new = np.empty(n, dtype=np.int64)
    own = np.empty(n)
    counts = np.zeros(k, dtype=np.int64)
    sums = np.zeros((k, 2))
    for it in range(max_iters):
        counts[:] = 0
        for i in range(n):
            best = np.inf
            arg = 0
            for j in range(k):
                dx = pts[i, 0] - centroids[j, 0]
                dy = pts[i, 1] - centroids[j, 1]
                d = math.sqrt(dx * dx + dy * dy)
                if d < best:
                    best = d
                    arg = j
            new[i] = arg
            own[i] = best
            counts[arg] += 1
        for j in range(k):
            if counts[j] != 0:
                continue
            # steal the farthest point from a cluster that can spare one
            far = -1
            fd = -1.0
            for i in range(n):
                if counts[new[i]] > 1 and own[i] > fd:
                    fd = own[i]
                    far = i
            if far < 0:
                continue
            counts[new[far]] -= 1
            new[far] = j
            counts[j] = 1
            own[far] = -1.0
        sums[:, :] = 0.0
        for i in range(n):
            sums[new[i], 0] += pts[i, 0]
            sums[new[i], 1] += pts[i, 1]
        shift = 0.0
        for j in range(k):
            if counts[j] == 0:
                continue
            cx = sums[j, 0] / counts[j]
            cy = sums[j, 1] / counts[j]
            dx = cx - centroids[j, 0]
            dy = cy - centroids[j, 1]
            shift = max(shift, math.sqrt(dx * dx + dy * dy))
            centroids[j, 0] = cx
            centroids[j, 1] = cy
        same = True
        for i in range(n):
            if labels[i] != new[i]:
                same = False
            labels[i] = new[i]
        if same or shift < tol:
            break


@dataclass
class SurpriseModel:
    centroids_prev2: np.ndarray
    centroids_prev1: np.ndarray
    predictions: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cluster", "c_prev2_x", "c_prev2_y", "c_prev1_x", "c_prev1_y", "pred_x", "pred_y"])
            for j, (a, b, p) in enumerate(zip(self.centroids_prev2, self.centroids_prev1, self.predictions)):
                w.writerow([j, *map(repr, map(float, (*a, *b, *p)))])


def update_surprise_model(gen_prev2, gen_prev1, k: int = 200, seed=None,
                          max_iters: int = 50, tol: float = 1e-6) -> SurpriseModel:
    """Cluster two consecutive snapshots and extrapolate each centroid linearly.

    The later clustering starts from the earlier centroids, which fixes the
    cluster pairing.
    """
    a, b = _as_points(gen_prev2), _as_points(gen_prev1)
    k = max(1, min(int(k), len(a), len(b)))
    c0 = kmeans(a, k, seed, max_iters, tol)
    c1 = kmeans(b, k, c0, max_iters, tol)
    return SurpriseModel(c0, c1, 2.0 * c1 - c0)


def surprise_score(target, model: SurpriseModel | np.ndarray, n_ss: int = 2, extra=None) -> float:
    """Mean distance to the ``n_ss`` nearest predictions (plus ``extra`` points, if given)."""
    preds = model.predictions if isinstance(model, SurpriseModel) else _as_points(model)
    extra = _EMPTY if extra is None or not len(extra) else _as_points(extra)
    return knn_mean(float(target[0]), float(target[1]), np.ascontiguousarray(preds, dtype=float), -1,
                    np.ascontiguousarray(extra), int(n_ss), np.empty(max(int(n_ss), 1)))


def nss_score(n: float, s: float, lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    return lam * n + (1.0 - lam) * s
