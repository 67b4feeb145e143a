"""Pareto ranking and crowding under maximisation."""

from __future__ import annotations

import numpy as np
from numba import njit


def dominates(a, b) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(a >= b) and np.any(a > b))


def dominance_matrix(scores: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when row ``i`` dominates row ``j``."""
    s = np.asarray(scores, dtype=float)
    ge = np.all(s[:, None, :] >= s[None, :, :], axis=2)
    gt = np.any(s[:, None, :] > s[None, :, :], axis=2)
    return ge & gt


def dominance_row(x: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(x dominates each row, each row dominates x)."""
    ge = np.all(x >= scores, axis=1)
    gt = np.any(x > scores, axis=1)
    le = np.all(x <= scores, axis=1)
    lt = np.any(x < scores, axis=1)
    return ge & gt, le & lt


@njit(cache=True)
def ranks_from_dominance(D):
    n = D.shape[0]
    count = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if D[i, j]:
                count[j] += 1
    rank = np.full(n, -1, dtype=np.int64)
    current = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    m = 0
    for j in range(n):
        if count[j] == 0:
            current[m] = j
            m += 1
    r = 0
    while m > 0:
        k = 0
        for a in range(m):
            p = current[a]
            rank[p] = r
            for q in range(n):
                if D[p, q]:
                    count[q] -= 1
                    if count[q] == 0:
                        nxt[k] = q
                        k += 1
        current, nxt = nxt, current
        m = k
        r += 1
    return rank


def pareto_ranks(scores: np.ndarray, D: np.ndarray | None = None) -> np.ndarray:
    s = np.asarray(scores, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if s.shape[1] == 1:
        # one objective: fronts are the distinct score levels, best first
        _, inv = np.unique(-s[:, 0], return_inverse=True)
        return inv.astype(np.int64).ravel()
    if D is None:
        D = dominance_matrix(s)
    return ranks_from_dominance(D)


def non_dominated_sort(scores, dims: int | None = None) -> list[np.ndarray]:
    """Fronts as index arrays, front 0 being the non-dominated set."""
    s = np.asarray(scores, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if dims is not None and s.shape[1] != dims:
        raise ValueError(f"expected {dims} objectives, got {s.shape[1]}")
    if len(s) == 0:
        return []
    rank = pareto_ranks(s)
    return [np.flatnonzero(rank == r) for r in range(rank.max() + 1)]


def crowding_distance(scores, ranks=None) -> np.ndarray:
    """Crowding of every row within its front (``ranks`` groups rows; default one front).

    Per objective, rows holding the front's extreme value get ``inf``, rows
    sharing an interior value with a front-mate get 0, and the rest get the
    normalised gap between their neighbours. Ties are therefore resolved
    the same way under any row permutation.
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    n = s.shape[0]
    ranks = np.zeros(n, dtype=np.int64) if ranks is None else np.asarray(ranks, dtype=np.int64)
    if n == 0:
        return np.zeros(0)
    return _crowding(np.ascontiguousarray(s), ranks)


@njit(cache=True)
def _crowding(s, ranks):
    n, d = s.shape
    out = np.zeros(n)
    for m in range(d):
        v_all = s[:, m]
        # sort by value, then stably by rank -> grouped by front, ascending within
        order = np.argsort(v_all, kind="mergesort")
        order = order[np.argsort(ranks[order], kind="mergesort")]
        a = 0
        while a < n:
            b = a
            r = ranks[order[a]]
            while b + 1 < n and ranks[order[b + 1]] == r:
                b += 1
            lo = v_all[order[a]]
            hi = v_all[order[b]]
            span = hi - lo
            for k in range(a, b + 1):
                v = v_all[order[k]]
                if v == lo or v == hi:
                    out[order[k]] = np.inf
                elif v_all[order[k - 1]] == v or v_all[order[k + 1]] == v:
                    continue
                else:
                    out[order[k]] += (v_all[order[k + 1]] - v_all[order[k - 1]]) / span
            a = b + 1
    return out


@njit(cache=True)
def _dense_rank_desc(v):
    n = v.shape[0]
    order = np.argsort(-v, kind="mergesort")
    rank = np.empty(n, dtype=np.int64)
    r = 0
    for a in range(n):
        if a > 0 and v[order[a]] != v[order[a - 1]]:
            r += 1
        rank[order[a]] = r
    return rank


@njit(cache=True)
def replacement_kernel(S1, D1, multi):
    """Rank the ``n + 1`` rows of ``S1`` (the last one being the newcomer) and pick who leaves.

    ``D1[:n, :n]`` must hold the dominance relation of the first ``n`` rows;
    the newcomer's row and column are filled in here. The victim is the
    worst-front row with the least crowding inside that front, preferring
    the newcomer on a tie and otherwise the lowest index.
    Returns ``(victim, ranks)``.
    """
    n = S1.shape[0] - 1
    d = S1.shape[1]
    if multi:
        for j in range(n):
            ge = True
            gt = False
            le = True
            lt = False
            for m in range(d):
                a = S1[n, m]
                b = S1[j, m]
                if a < b:
                    ge = False
                    lt = True
                elif a > b:
                    le = False
                    gt = True
            D1[n, j] = ge and gt
            D1[j, n] = le and lt
        D1[n, n] = False
        rank = ranks_from_dominance(D1)
    else:
        rank = _dense_rank_desc(S1[:, 0].copy())
    worst = rank.max()
    members = np.flatnonzero(rank == worst)
    front = np.empty((members.shape[0], d))
    for a in range(members.shape[0]):
        front[a] = S1[members[a]]
    crowd = _crowding(front, np.zeros(members.shape[0], dtype=np.int64))
    low = crowd.min()
    victim = -1
    for a in range(members.shape[0]):
        if crowd[a] == low:
            if members[a] == n:
                victim = n
                break
            if victim < 0:
                victim = members[a]
    return victim, rank
