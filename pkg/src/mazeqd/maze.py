"""Procedural deceptive mazes: recursive division, grid shortest paths, text format."""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable

import numpy as np

from .geometry import distance_field, split_walls

ROBOT_RADIUS = 8.0
WORLD_SIZE = 200.0
CORNER_OFFSET = 15.0
CELL_SIZE = 5.0
SUBDIVISION_RANGE = (5, 12)

Point = tuple[float, float]
Segment = tuple[float, float, float, float]


class MazeFormatError(ValueError):
    def __init__(self, lineno: int, reason: str):
        self.lineno = lineno
        self.reason = reason
        where = f"line {lineno}: " if lineno else ""
        super().__init__(f"{where}{reason}")


@dataclass(frozen=True)
class Maze:
    width: float
    height: float
    walls: tuple[Segment, ...]
    start: Point
    goal: Point
    subdivisions: int = 0
    astar_length: float | None = field(default=None, compare=True)

    @cached_property
    def wall_array(self) -> np.ndarray:
        return np.array(self.walls, dtype=float).reshape(-1, 4)

    @cached_property
    def wall_sets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return split_walls(self.wall_array)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def center(self) -> Point:
        return (self.width / 2.0, self.height / 2.0)

    def interior_walls(self) -> tuple[Segment, ...]:
        return self.walls[4:]


def border_walls(width: float, height: float) -> list[Segment]:
    return [
        (0.0, 0.0, width, 0.0),
        (width, 0.0, width, height),
        (width, height, 0.0, height),
        (0.0, height, 0.0, 0.0),
    ]


def empty_maze(width: float = WORLD_SIZE, height: float = WORLD_SIZE,
               start: Point | None = None, goal: Point | None = None) -> Maze:
    start = start or (CORNER_OFFSET, CORNER_OFFSET)
    goal = goal or (width - CORNER_OFFSET, height - CORNER_OFFSET)
    return Maze(float(width), float(height), tuple(border_walls(width, height)), start, goal, 0)


# ---------------------------------------------------------------------------
# lattice used for traversability and A*
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
_MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass
class Grid:
    """Lattice nodes at integer multiples of ``cell_size``; ``free[i, j]`` is node (i*cs, j*cs)."""

    free: np.ndarray
    cell_size: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.free.shape

    def node_xy(self, node: tuple[int, int]) -> Point:
        return (node[0] * self.cell_size, node[1] * self.cell_size)

    def snap(self, p: Point) -> tuple[int, int] | None:
        """Closest free lattice node among the four surrounding ``p``."""
        nx, ny = self.shape
        fx, fy = p[0] / self.cell_size, p[1] / self.cell_size
        cands = []
        for i in (math.floor(fx), math.ceil(fx)):
            for j in (math.floor(fy), math.ceil(fy)):
                if 0 <= i < nx and 0 <= j < ny and self.free[i, j]:
                    cands.append((math.hypot(i - fx, j - fy), i, j))
        if not cands:
            return None
        _, i, j = min(cands)
        return (i, j)

    def neighbors(self, node: tuple[int, int]) -> Iterable[tuple[tuple[int, int], bool]]:
        """Yield ``(neighbor, is_diagonal)``; diagonals may not cut blocked corners."""
        i, j = node
        nx, ny = self.shape
        free = self.free
        for di, dj in _MOVES:
            a, b = i + di, j + dj
            if not (0 <= a < nx and 0 <= b < ny) or not free[a, b]:
                continue
            diag = di != 0 and dj != 0
            if diag and not (free[i + di, j] and free[i, j + dj]):
                continue
            yield (a, b), diag


def build_grid(walls: np.ndarray, width: float, height: float,
               cell_size: float = CELL_SIZE, robot_radius: float = ROBOT_RADIUS) -> Grid:
    nx = int(math.floor(width / cell_size + 1e-9)) + 1
    ny = int(math.floor(height / cell_size + 1e-9)) + 1
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    d = distance_field(ii.ravel() * cell_size, jj.ravel() * cell_size, np.asarray(walls, float).reshape(-1, 4))
    return Grid(free=(d >= robot_radius).reshape(nx, ny), cell_size=cell_size)


def maze_grid(maze: Maze, cell_size: float = CELL_SIZE, robot_radius: float = ROBOT_RADIUS) -> Grid:
    return build_grid(maze.wall_array, maze.width, maze.height, cell_size, robot_radius)


def grid_reachable(grid: Grid, start: Point, goal: Point) -> bool:
    s, g = grid.snap(start), grid.snap(goal)
    if s is None or g is None:
        return False
    seen = {s}
    queue = deque([s])
    while queue:
        node = queue.popleft()
        if node == g:
            return True
        for nb, _ in grid.neighbors(node):
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return False


def path_length(grid: Grid, path: list[tuple[int, int]], start: Point, goal: Point) -> float:
    """Length of a lattice path plus the straight legs joining it to the real endpoints.

    Computed from step counts so equal-cost paths give bit-identical lengths.
    """
    straight = diag = 0
    for (a, b), (c, d) in zip(path, path[1:]):
        if a != c and b != d:
            diag += 1
        else:
            straight += 1
    cs = grid.cell_size
    sx, sy = grid.node_xy(path[0])
    gx, gy = grid.node_xy(path[-1])
    legs = math.hypot(start[0] - sx, start[1] - sy) + math.hypot(goal[0] - gx, goal[1] - gy)
    return (straight + diag * _SQRT2) * cs + legs


def astar_path(grid: Grid, start: Point, goal: Point) -> list[tuple[int, int]] | None:
    s, g = grid.snap(start), grid.snap(goal)
    if s is None or g is None:
        return None
    cs = grid.cell_size

    def h(n):
        dx, dy = abs(n[0] - g[0]), abs(n[1] - g[1])
        return (max(dx, dy) - min(dx, dy) + _SQRT2 * min(dx, dy)) * cs

    best = {s: 0.0}
    parent = {s: None}
    heap = [(h(s), 0, s)]
    tick = 1
    closed = set()
    while heap:
        _, _, node = heapq.heappop(heap)
        if node in closed:
            continue
        if node == g:
            path = []
            while node is not None:
                path.append(node)
                node = parent[node]
            return path[::-1]
        closed.add(node)
        base = best[node]
        for nb, diag in grid.neighbors(node):
            cost = base + (_SQRT2 * cs if diag else cs)
            if cost < best.get(nb, math.inf):
                best[nb] = cost
                parent[nb] = node
                heapq.heappush(heap, (cost + h(nb), tick, nb))
                tick += 1
    return None


def astar_length(maze: Maze, cell_size: float = CELL_SIZE, robot_radius: float = ROBOT_RADIUS) -> float:
    """Shortest start-to-goal length for a disc of ``robot_radius``; ``inf`` if unreachable."""
    if cell_size > robot_radius:
        raise ValueError("cell_size must not exceed the robot radius")
    grid = maze_grid(maze, cell_size, robot_radius)
    path = astar_path(grid, maze.start, maze.goal)
    if path is None:
        return math.inf
    return path_length(grid, path, maze.start, maze.goal)


def measure(maze: Maze, cell_size: float = CELL_SIZE) -> Maze:
    return replace(maze, astar_length=astar_length(maze, cell_size))


# ---------------------------------------------------------------------------
# recursive division
# ---------------------------------------------------------------------------

def _r(v: float) -> float:
    return round(float(v), 6)


def generate_maze(width: float = WORLD_SIZE, height: float = WORLD_SIZE, subdivisions: int = 8,
                  seed=None, *, robot_radius: float = ROBOT_RADIUS,
                  cell_size: float = CELL_SIZE) -> Maze:
    """Recursive-division maze with at most ``subdivisions`` gapped walls.

    Chambers are split breadth-first across their longer side. A wall that
    would disconnect start from goal is discarded and its chamber is not
    divided further. Gaps and corridors are at least two robot diameters wide.
    """
    if not (width > 0 and height > 0):
        raise ValueError("maze bounds must have positive area")
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    rng = np.random.default_rng(seed)
    corridor = 4.0 * robot_radius
    gap = 4.0 * robot_radius
    start = (_r(min(CORNER_OFFSET, width / 2)), _r(min(CORNER_OFFSET, height / 2)))
    goal = (_r(max(width - CORNER_OFFSET, width / 2)), _r(max(height - CORNER_OFFSET, height / 2)))
    walls: list[Segment] = [tuple(_r(v) for v in w) for w in border_walls(width, height)]

    chambers = deque([(0.0, 0.0, float(width), float(height))])
    placed = 0
    while chambers and placed < subdivisions:
        x0, y0, x1, y1 = chambers.popleft()
        cw, ch = x1 - x0, y1 - y0
        if cw > ch:
            vertical = True
        elif ch > cw:
            vertical = False
        else:
            vertical = bool(rng.random() < 0.5)
        span = cw if vertical else ch
        length = ch if vertical else cw
        if span < 2 * corridor or length <= gap:
            continue
        lo = x0 if vertical else y0
        pos = _r(rng.uniform(lo + corridor, lo + span - corridor))
        along0 = y0 if vertical else x0
        g0 = _r(rng.uniform(along0, along0 + length - gap))
        g1 = _r(g0 + gap)
        pieces = []
        if g0 > along0:
            pieces.append((along0, g0))
        if g1 < along0 + length:
            pieces.append((g1, along0 + length))
        new = [(pos, _r(a), pos, _r(b)) if vertical else (_r(a), pos, _r(b), pos) for a, b in pieces]
        candidate = walls + new
        grid = build_grid(np.array(candidate), width, height, cell_size, robot_radius)
        if not grid_reachable(grid, start, goal):
            continue
        walls = candidate
        placed += 1
        if vertical:
            chambers.append((x0, y0, pos, y1))
            chambers.append((pos, y0, x1, y1))
        else:
            chambers.append((x0, y0, x1, pos))
            chambers.append((x0, pos, x1, y1))
    return Maze(float(width), float(height), tuple(walls), start, goal, placed)


def random_subdivisions(rng, lo: int = SUBDIVISION_RANGE[0], hi: int = SUBDIVISION_RANGE[1]) -> int:
    return int(np.random.default_rng(rng).integers(lo, hi + 1))


# ---------------------------------------------------------------------------
# deceptiveness filter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeceptivenessReport:
    objective_successes: int
    nslc_successes: int
    runs: int
    truncated: bool = False

    @property
    def accepted(self) -> bool:
        return self.objective_successes == 0 and self.nslc_successes >= 1


def classify_deceptiveness(maze: Maze, runs: int, budget, seed=0, *, early_stop: bool = False,
                           workers: int = 1) -> DeceptivenessReport:
    """Run objective search and NS-LC ``runs`` times each on ``maze``.

    With ``early_stop`` the loops end as soon as the verdict is known (first
    objective success, or first NS-LC success), so counts become lower bounds
    while ``accepted`` is unchanged.
    """
    from .qd import ALGORITHMS, steady_state_run
    from .seeding import derive_seed

    if runs < 1:
        raise ValueError("runs must be >= 1")

    def batch(alg: str):
        seeds = [derive_seed(seed, "deceptiveness", alg, r) for r in range(runs)]
        spec = ALGORITHMS[alg]
        if workers > 1 and not early_stop:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(workers) as ex:
                results = list(ex.map(steady_state_run, [maze] * runs, [spec] * runs, [budget] * runs, seeds))
            return sum(r.success for r in results), False
        wins = 0
        for i, s in enumerate(seeds):
            wins += steady_state_run(maze, spec, budget, s).success
            if early_stop and wins:
                return wins, i + 1 < runs
        return wins, False

    obj, cut_obj = batch("OBJ")
    if early_stop and obj:
        return DeceptivenessReport(obj, 0, runs, truncated=True)
    ns, cut_ns = batch("NS-LC")
    return DeceptivenessReport(obj, ns, runs, truncated=cut_obj or cut_ns)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def serialize_maze(maze: Maze) -> str:
    lines = [
        f"bounds {_fmt(maze.width)} {_fmt(maze.height)}",
        f"start {_fmt(maze.start[0])} {_fmt(maze.start[1])}",
        f"goal {_fmt(maze.goal[0])} {_fmt(maze.goal[1])}",
        f"subdivisions {maze.subdivisions}",
    ]
    if maze.astar_length is not None:
        lines.append(f"astar {maze.astar_length!r}")
    lines += ["wall " + " ".join(_fmt(v) for v in w) for w in maze.walls]
    return "\n".join(lines) + "\n"


_ARITY = {"bounds": 2, "start": 2, "goal": 2, "subdivisions": 1, "astar": 1, "wall": 4}


def parse_maze(text: str) -> Maze:
    fields: dict[str, tuple] = {}
    walls: list[Segment] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        if key not in _ARITY:
            raise MazeFormatError(lineno, f"unknown directive {key!r}")
        if len(args) != _ARITY[key]:
            raise MazeFormatError(lineno, f"{key} expects {_ARITY[key]} values, got {len(args)}")
        try:
            if key == "subdivisions":
                vals = (int(args[0]),)
            else:
                vals = tuple(float(a) for a in args)
        except ValueError:
            raise MazeFormatError(lineno, f"bad number in {key} line") from None
        if not all(math.isfinite(v) for v in vals) and key != "astar":
            raise MazeFormatError(lineno, f"non-finite value in {key} line")
        if key == "wall":
            walls.append(vals)
        elif key in fields:
            raise MazeFormatError(lineno, f"duplicate {key}")
        else:
            fields[key] = vals
    for key in ("bounds", "start", "goal"):
        if key not in fields:
            raise MazeFormatError(0, f"missing {key}")
    w, h = fields["bounds"]
    if not (w > 0 and h > 0):
        raise MazeFormatError(0, "bounds must be positive")
    return Maze(
        width=w,
        height=h,
        walls=tuple(walls),
        start=fields["start"],
        goal=fields["goal"],
        subdivisions=fields.get("subdivisions", (0,))[0],
        astar_length=fields["astar"][0] if "astar" in fields else None,
    )


def load_maze(path) -> Maze:
    with open(path) as fh:
        return parse_maze(fh.read())


def save_maze(maze: Maze, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_maze(maze))
