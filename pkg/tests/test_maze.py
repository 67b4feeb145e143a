import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mazeqd.maze import (CELL_SIZE, ROBOT_RADIUS, SUBDIVISION_RANGE, Maze, MazeFormatError, astar_length,
                         build_grid, classify_deceptiveness, empty_maze, generate_maze, grid_reachable, maze_grid,
                         measure, parse_maze, random_subdivisions, serialize_maze)
from mazeqd.qd import EvolutionBudget

import oracles


def check_invariants(m: Maze):
    for w in m.walls:
        assert 0 <= w[0] <= m.width and 0 <= w[2] <= m.width
        assert 0 <= w[1] <= m.height and 0 <= w[3] <= m.height
    for p in (m.start, m.goal):
        assert 0 < p[0] < m.width and 0 < p[1] < m.height
        assert oracles.clearance(p[0], p[1], m.walls) >= ROBOT_RADIUS
    assert grid_reachable(maze_grid(m), m.start, m.goal)


def test_zero_subdivisions_is_open():
    m = generate_maze(200, 200, 0, seed=123)
    assert len(m.walls) == 4 and m.subdivisions == 0
    check_invariants(m)


def test_eight_subdivisions_seed7():
    m = generate_maze(200, 200, 8, seed=7)
    assert m.subdivisions == 8
    check_invariants(m)
    # every placed wall contributes one or two gapped pieces
    assert 8 <= len(m.interior_walls()) <= 16


def test_generator_deterministic():
    a = generate_maze(200, 200, 9, seed=42)
    b = generate_maze(200, 200, 9, seed=42)
    assert a.walls == b.walls
    assert generate_maze(200, 200, 9, seed=43).walls != a.walls


def test_zero_area_rejected():
    with pytest.raises(ValueError):
        generate_maze(0, 200, 3, seed=1)
    with pytest.raises(ValueError):
        generate_maze(200, -1, 3, seed=1)


def test_start_goal_corners():
    m = generate_maze(200, 200, 5, seed=0)
    assert m.start == (15.0, 15.0) and m.goal == (185.0, 185.0)


def test_gap_and_corridor_width():
    # gapped walls leave an opening of at least two robot diameters
    for seed in range(10):
        m = generate_maze(200, 200, 12, seed=seed)
        walls = m.interior_walls()
        lines = {}
        for x1, y1, x2, y2 in walls:
            key = ("v", x1) if x1 == x2 else ("h", y1)
            lines.setdefault(key, []).append((min(y1, y2), max(y1, y2)) if x1 == x2 else (min(x1, x2), max(x1, x2)))
        for key, spans in lines.items():
            spans.sort()
            for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
                if b0 > a1:
                    assert b0 - a1 >= 4 * ROBOT_RADIUS - 1e-6


def test_subdivision_sampling_range():
    assert SUBDIVISION_RANGE == (5, 12)
    draws = {random_subdivisions(s) for s in range(300)}
    assert draws == set(range(5, 13))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 12))
def test_generated_mazes_traversable(seed, k):
    m = generate_maze(200, 200, k, seed=seed)
    check_invariants(m)
    assert m.subdivisions <= k


def test_astar_empty_diagonal():
    m = empty_maze(start=(20.0, 20.0), goal=(180.0, 180.0))
    L = astar_length(m)
    assert abs(L - 160 * math.sqrt(2)) <= CELL_SIZE * math.sqrt(2)


def test_astar_cell_size_precondition():
    with pytest.raises(ValueError):
        astar_length(empty_maze(), cell_size=ROBOT_RADIUS + 1)


def test_astar_unreachable_is_inf():
    m = empty_maze()
    blocked = Maze(m.width, m.height, m.walls + ((100.0, 0.0, 100.0, 200.0),), m.start, m.goal)
    assert astar_length(blocked) == math.inf


@pytest.mark.parametrize("k", range(5, 13))
def test_astar_matches_dijkstra_and_magnitude(k):
    m = generate_maze(200, 200, k, seed=1000 + k)
    L = astar_length(m)
    assert L == oracles.dijkstra_length(maze_grid(m), m.start, m.goal)
    # same order of magnitude as the reported 291-403 range
    assert 150 < L < 800
    assert L >= math.dist(m.start, m.goal)


def test_measure_and_roundtrip_astar():
    m = measure(generate_maze(200, 200, 6, seed=3))
    assert math.isfinite(m.astar_length)
    assert parse_maze(serialize_maze(m)) == m


def test_serialize_roundtrip_empty():
    m = empty_maze()
    assert parse_maze(serialize_maze(m)) == m


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_roundtrip_bit_identical(seed):
    m = generate_maze(200, 200, 8, seed=seed)
    back = parse_maze(serialize_maze(m))
    assert back == m
    assert all(a == b for wa, wb in zip(m.walls, back.walls) for a, b in zip(wa, wb))


def test_parse_missing_goal():
    with pytest.raises(MazeFormatError, match="missing goal"):
        parse_maze("bounds 200 200\nstart 15 15\nsubdivisions 0\n")


def test_parse_reports_line_numbers():
    with pytest.raises(MazeFormatError) as e:
        parse_maze("bounds 200 200\n# comment\nstart 15 15\nwall 1 2 3\n")
    assert e.value.lineno == 4
    with pytest.raises(MazeFormatError) as e:
        parse_maze("bounds 200 200\nfrobnicate 1\n")
    assert e.value.lineno == 2
    with pytest.raises(MazeFormatError) as e:
        parse_maze("bounds 200 abc\n")
    assert e.value.lineno == 1


def test_parse_comments_and_whitespace():
    text = "# header\nbounds   200 200  # world\nstart 15 15\ngoal 185 185\nsubdivisions 0\n\nwall 0 0 200 0\n"
    m = parse_maze(text)
    assert m.walls == ((0.0, 0.0, 200.0, 0.0),) and m.goal == (185.0, 185.0)


def test_grid_clearance_blocking():
    m = empty_maze()
    g = build_grid(m.wall_array, m.width, m.height)
    # nodes within the robot radius of the border are blocked
    assert not g.free[1, 10] and g.free[2, 10]


def test_deceptiveness_degenerate_goal_at_start():
    m = Maze(200.0, 200.0, empty_maze().walls, (15.0, 15.0), (17.0, 15.0))
    rep = classify_deceptiveness(m, 3, EvolutionBudget(10, 2, 50), seed=0)
    assert rep.objective_successes == 3 and not rep.accepted


def test_deceptiveness_empty_maze_nslc_succeeds():
    rep = classify_deceptiveness(empty_maze(), 5, EvolutionBudget(50, 20, 300), seed=1)
    assert rep.nslc_successes >= 1
    assert rep.accepted == (rep.objective_successes == 0 and rep.nslc_successes >= 1)


def test_deceptiveness_early_stop_same_verdict():
    m = generate_maze(200, 200, 6, seed=11)
    b = EvolutionBudget(20, 4, 100)
    full = classify_deceptiveness(m, 2, b, seed=5)
    quick = classify_deceptiveness(m, 2, b, seed=5, early_stop=True)
    assert full.accepted == quick.accepted
    assert quick.objective_successes <= full.objective_successes
    assert quick.nslc_successes <= full.nslc_successes


def test_deceptiveness_requires_runs():
    with pytest.raises(ValueError):
        classify_deceptiveness(empty_maze(), 0, EvolutionBudget(10, 1, 10))


def test_subdivision_length_correlation_reported():
    lengths, ks = [], []
    for s in range(24):
        k = 5 + s % 8
        ks.append(k)
        lengths.append(astar_length(generate_maze(200, 200, k, seed=500 + s)))
    r = np.corrcoef(ks, lengths)[0, 1]
    print(f"subdivisions vs A* length correlation over 24 mazes: {r:+.2f}")
    assert math.isfinite(r)
