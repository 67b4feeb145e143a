"""Segment geometry kernels shared by the maze tools and the robot simulator.

Walls are stored as an ``(n, 4)`` float array of ``x1, y1, x2, y2`` rows.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def point_segment_distance(px, py, x1, y1, x2, y2):
    dx = x2 - x1
    dy = y2 - y1
    ll = dx * dx + dy * dy
    if ll == 0.0:
        t = 0.0
    else:
        t = ((px - x1) * dx + (py - y1) * dy) / ll
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    cx = x1 + t * dx - px
    cy = y1 + t * dy - py
    return math.sqrt(cx * cx + cy * cy)


@njit(cache=True)
def clearance(px, py, walls):
    """Distance from a point to the nearest wall (inf when there are no walls)."""
    best = np.inf
    for i in range(walls.shape[0]):
        x1 = walls[i, 0]
        y1 = walls[i, 1]
        dx = walls[i, 2] - x1
        dy = walls[i, 3] - y1
        ll = dx * dx + dy * dy
        t = 0.0
        if ll > 0.0:
            t = ((px - x1) * dx + (py - y1) * dy) / ll
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
        cx = x1 + t * dx - px
        cy = y1 + t * dy - py
        d2 = cx * cx + cy * cy
        if d2 < best:
            best = d2
    return math.sqrt(best)


@njit(cache=True)
def ray_segment_distance(px, py, ux, uy, x1, y1, x2, y2):
    """Distance along the unit ray (px,py)+t(ux,uy) to the segment, inf if missed."""
    ex = x2 - x1
    ey = y2 - y1
    denom = ux * ey - uy * ex
    if denom == 0.0:
        return np.inf
    wx = x1 - px
    wy = y1 - py
    t = (wx * ey - wy * ex) / denom
    s = (wx * uy - wy * ux) / denom
    if t >= 0.0 and 0.0 <= s <= 1.0:
        return t
    return np.inf


@njit(cache=True)
def cast_ray(px, py, angle, walls, max_range):
    ux = math.cos(angle)
    uy = math.sin(angle)
    best = max_range
    for i in range(walls.shape[0]):
        ex = walls[i, 2] - walls[i, 0]
        ey = walls[i, 3] - walls[i, 1]
        denom = ux * ey - uy * ex
        if denom == 0.0:
            continue
        wx = walls[i, 0] - px
        wy = walls[i, 1] - py
        tn = wx * ey - wy * ex
        sn = wx * uy - wy * ux
        if denom < 0.0:
            denom = -denom
            tn = -tn
            sn = -sn
        # hit iff t = tn/denom in [0, best) and s = sn/denom in [0, 1]
        if tn < 0.0 or sn < 0.0 or sn > denom or tn >= best * denom:
            continue
        best = tn / denom
    return best


def distance_field(xs: np.ndarray, ys: np.ndarray, walls: np.ndarray) -> np.ndarray:
    """Vectorised clearance of every (xs[i], ys[i]) point to the wall set."""
    px = np.asarray(xs, dtype=float)[:, None]
    py = np.asarray(ys, dtype=float)[:, None]
    if len(walls) == 0:
        return np.full(px.shape[0], np.inf)
    x1, y1, x2, y2 = (walls[:, i][None, :] for i in range(4))
    dx = x2 - x1
    dy = y2 - y1
    ll = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(ll > 0, ((px - x1) * dx + (py - y1) * dy) / np.where(ll > 0, ll, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    cx = x1 + t * dx - px
    cy = y1 + t * dy - py
    return np.sqrt(cx * cx + cy * cy).min(axis=1)


def split_walls(walls: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partition walls into vertical ``(x, ylo, yhi)``, horizontal ``(y, xlo, xhi)`` and general rows."""
    w = np.asarray(walls, dtype=float).reshape(-1, 4)
    vert = w[:, 0] == w[:, 2]
    horiz = (w[:, 1] == w[:, 3]) & ~vert
    other = ~(vert | horiz)
    v = np.column_stack([w[vert, 0], np.minimum(w[vert, 1], w[vert, 3]), np.maximum(w[vert, 1], w[vert, 3])])
    h = np.column_stack([w[horiz, 1], np.minimum(w[horiz, 0], w[horiz, 2]), np.maximum(w[horiz, 0], w[horiz, 2])])
    return (np.ascontiguousarray(v.reshape(-1, 3)), np.ascontiguousarray(h.reshape(-1, 3)),
            np.ascontiguousarray(w[other]))


@njit(cache=True)
def clearance_split(px, py, vert, horiz, other):
    best = np.inf
    for i in range(vert.shape[0]):
        dx = vert[i, 0] - px
        cy = min(max(py, vert[i, 1]), vert[i, 2]) - py
        d2 = dx * dx + cy * cy
        if d2 < best:
            best = d2
    for i in range(horiz.shape[0]):
        dy = horiz[i, 0] - py
        cx = min(max(px, horiz[i, 1]), horiz[i, 2]) - px
        d2 = dy * dy + cx * cx
        if d2 < best:
            best = d2
    best = math.sqrt(best)
    if other.shape[0] > 0:
        best = min(best, clearance(px, py, other))
    return best


@njit(cache=True)
def cast_ray_split(px, py, ux, uy, vert, horiz, other, max_range):
    """Distance along unit direction (ux, uy) to the first wall, capped at ``max_range``."""
    best = max_range
    if ux != 0.0:
        inv = 1.0 / ux
        for i in range(vert.shape[0]):
            t = (vert[i, 0] - px) * inv
            if t < 0.0 or t >= best:
                continue
            y = py + t * uy
            if vert[i, 1] <= y <= vert[i, 2]:
                best = t
    if uy != 0.0:
        inv = 1.0 / uy
        for i in range(horiz.shape[0]):
            t = (horiz[i, 0] - py) * inv
            if t < 0.0 or t >= best:
                continue
            x = px + t * ux
            if horiz[i, 1] <= x <= horiz[i, 2]:
                best = t
    for i in range(other.shape[0]):
        d = ray_segment_distance(px, py, ux, uy, other[i, 0], other[i, 1], other[i, 2], other[i, 3])
        if d < best:
            best = d
    return best
