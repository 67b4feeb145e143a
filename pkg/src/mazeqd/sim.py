"""Kinematic disc robot with rangefinders and a pie-slice goal radar."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from numba import njit

from .geometry import cast_ray_split, clearance_split
from .maze import ROBOT_RADIUS, Maze
from .neat import ControllerFault, Genome, Network, activate_arrays, compile_network

DEFAULT_STEPS = 300
COLLISION_SKIN = 1e-9


@dataclass(frozen=True)
class RobotConfig:
    radius: float = ROBOT_RADIUS
    v_max: float = 3.0
    omega_max: float = 0.25
    v_gain: float = 6.0
    omega_gain: float = 0.5
    goal_radius: float = 5.0
    max_range: float = 100.0
    bearings: tuple[float, ...] = field(default=tuple(math.radians(b) for b in (-90, -45, 0, 45, 90, 180)))

    def params(self) -> np.ndarray:
        return np.array([self.radius, self.v_max, self.omega_max, self.v_gain,
                         self.omega_gain, self.goal_radius, self.max_range])

    def bearing_array(self) -> np.ndarray:
        return np.array(self.bearings, dtype=float)

    def bearing_trig(self) -> tuple[np.ndarray, np.ndarray]:
        b = self.bearing_array()
        return np.cos(b), np.sin(b)


DEFAULT_ROBOT = RobotConfig()
RADAR_SLICES = ("front", "left", "back", "right")


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    heading: float
    speed: float = 0.0
    angular_velocity: float = 0.0
    radius: float = ROBOT_RADIUS

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class SensorReading:
    rangefinders: tuple[float, ...]
    radar: tuple[int, ...]

    def as_inputs(self) -> np.ndarray:
        return np.array(self.rangefinders + self.radar, dtype=float)


@dataclass(frozen=True)
class SimOutcome:
    final_position: tuple[float, float]
    success: bool
    objective: float
    steps_used: int


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def radar_slice(x, y, heading, gx, gy):
    rel = math.atan2(gy - y, gx - x) - heading
    rel = (rel + math.pi) % (2.0 * math.pi) - math.pi
    q = math.pi / 4.0
    if -q <= rel < q:
        return 0
    if q <= rel < 3.0 * q:
        return 1
    if -3.0 * q <= rel < -q:
        return 3
    return 2


@njit(cache=True)
def sense_into(out, x, y, heading, gx, gy, vert, horiz, other, bcos, bsin, max_range):
    ch = math.cos(heading)
    sh = math.sin(heading)
    nb = bcos.shape[0]
    for i in range(nb):
        ux = ch * bcos[i] - sh * bsin[i]
        uy = sh * bcos[i] + ch * bsin[i]
        out[i] = cast_ray_split(x, y, ux, uy, vert, horiz, other, max_range) / max_range
    for k in range(4):
        out[nb + k] = 0.0
    out[nb + radar_slice(x, y, heading, gx, gy)] = 1.0


@njit(cache=True)
def step_kernel(state, o1, o2, vert, horiz, other, params):
    """Advance [x, y, heading, speed, omega] in place by one tick."""
    radius, v_max, w_max, v_gain, w_gain = params[0], params[1], params[2], params[3], params[4]
    w = state[4] + (o1 - 0.5) * w_gain
    w = min(max(w, -w_max), w_max)
    v = state[3] + (o2 - 0.5) * v_gain
    v = min(max(v, -v_max), v_max)
    h = state[2] + w
    cx = state[0] + v * math.cos(h)
    cy = state[1] + v * math.sin(h)
    state[2] = h
    state[3] = v
    state[4] = w
    if clearance_split(cx, cy, vert, horiz, other) >= radius + COLLISION_SKIN:
        state[0] = cx
        state[1] = cy


@njit(cache=True)
def _run_network(vert, horiz, other, start, goal, heading0, max_steps, params, bcos, bsin,
                 order, ptr, src, weight, outputs, n_nodes, trace):
    """Returns (x, y, success, steps_used, fault). ``trace`` rows: x, y, heading."""
    goal_radius, max_range = params[5], params[6]
    state = np.zeros(5)
    state[0] = start[0]
    state[1] = start[1]
    state[2] = heading0
    values = np.zeros(n_nodes)
    inputs = np.zeros(bcos.shape[0] + 4)
    record = trace.shape[0] > 0
    for t in range(max_steps):
        if record:
            trace[t, 0] = state[0]
            trace[t, 1] = state[1]
            trace[t, 2] = state[2]
        dx = state[0] - goal[0]
        dy = state[1] - goal[1]
        if math.sqrt(dx * dx + dy * dy) <= goal_radius:
            return state[0], state[1], True, t, False
        sense_into(inputs, state[0], state[1], state[2], goal[0], goal[1], vert, horiz, other, bcos, bsin, max_range)
        if not activate_arrays(values, inputs, order, ptr, src, weight, outputs):
            return state[0], state[1], False, t, True
        o1 = min(max(values[outputs[0]], 0.0), 1.0)
        o2 = min(max(values[outputs[1]], 0.0), 1.0)
        step_kernel(state, o1, o2, vert, horiz, other, params)
    if record:
        trace[max_steps, 0] = state[0]
        trace[max_steps, 1] = state[1]
        trace[max_steps, 2] = state[2]
    dx = state[0] - goal[0]
    dy = state[1] - goal[1]
    return state[0], state[1], math.sqrt(dx * dx + dy * dy) <= goal_radius, max_steps, False


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def start_state(maze: Maze, config: RobotConfig = DEFAULT_ROBOT) -> RobotState:
    cx, cy = maze.center
    heading = math.atan2(cy - maze.start[1], cx - maze.start[0])
    return RobotState(maze.start[0], maze.start[1], heading, radius=config.radius)


def sense(maze: Maze, state: RobotState, config: RobotConfig = DEFAULT_ROBOT) -> SensorReading:
    nb = len(config.bearings)
    out = np.zeros(nb + 4)
    sense_into(out, state.x, state.y, state.heading, maze.goal[0], maze.goal[1],
               *maze.wall_sets, *config.bearing_trig(), config.max_range)
    return SensorReading(tuple(float(v) for v in out[:nb]), tuple(int(v) for v in out[nb:]))


def step(maze: Maze, state: RobotState, control: Sequence[float], config: RobotConfig = DEFAULT_ROBOT) -> RobotState:
    o1, o2 = (float(c) for c in control)
    if not (math.isfinite(o1) and math.isfinite(o2)):
        raise ControllerFault("non-finite control")
    arr = np.array([state.x, state.y, state.heading, state.speed, state.angular_velocity])
    step_kernel(arr, o1, o2, *maze.wall_sets, config.params())
    return RobotState(*(float(v) for v in arr), radius=state.radius)


Controller = Union[Genome, Network, Callable[[np.ndarray], Sequence[float]]]


def simulate(maze: Maze, controller: Controller, max_steps: int = DEFAULT_STEPS,
             config: RobotConfig = DEFAULT_ROBOT, trace_path=None) -> SimOutcome:
    """Run sense -> activate -> step until success or ``max_steps`` ticks.

    ``controller`` may be a genome, a compiled network, or any callable taking
    the 10 sensor inputs and returning two outputs in [0, 1].
    """
    if isinstance(controller, Genome):
        controller = compile_network(controller)
    s0 = start_state(maze, config)
    if isinstance(controller, Network):
        trace = np.zeros((max_steps + 1, 3)) if trace_path else np.zeros((0, 3))
        x, y, ok, steps, fault = _run_network(
            *maze.wall_sets, np.array(maze.start, float), np.array(maze.goal, float), s0.heading,
            max_steps, config.params(), *config.bearing_trig(),
            controller.order, controller.ptr, controller.src, controller.weight, controller.outputs,
            controller.size, trace)
        if fault:
            raise ControllerFault("non-finite activation")
        if trace_path:
            _dump_trace(trace_path, trace[: steps + 1])
    else:
        x, y, ok, steps = _run_callable(maze, controller, max_steps, config, s0, trace_path)
    return SimOutcome((float(x), float(y)), bool(ok), math.hypot(x - maze.goal[0], y - maze.goal[1]), int(steps))


def _run_callable(maze, controller, max_steps, config, s0, trace_path):
    walls = maze.wall_sets
    params = config.params()
    bcos, bsin = config.bearing_trig()
    gx, gy = maze.goal
    state = np.array([s0.x, s0.y, s0.heading, 0.0, 0.0])
    inputs = np.zeros(len(bcos) + 4)
    rows = []
    for t in range(max_steps + 1):
        rows.append(state[:3].copy())
        if math.hypot(state[0] - gx, state[1] - gy) <= config.goal_radius:
            break
        if t == max_steps:
            break
        sense_into(inputs, state[0], state[1], state[2], gx, gy, *walls, bcos, bsin, config.max_range)
        o1, o2 = (float(v) for v in controller(inputs.copy()))
        if not (math.isfinite(o1) and math.isfinite(o2)):
            raise ControllerFault("controller produced a non-finite output")
        step_kernel(state, min(max(o1, 0.0), 1.0), min(max(o2, 0.0), 1.0), *walls, params)
    if trace_path:
        _dump_trace(trace_path, np.array(rows))
    ok = math.hypot(state[0] - gx, state[1] - gy) <= config.goal_radius
    return state[0], state[1], ok, t


def _dump_trace(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tick", "x", "y", "heading"])
        for t, (x, y, h) in enumerate(rows):
            w.writerow([t, repr(float(x)), repr(float(y)), repr(float(h))])
