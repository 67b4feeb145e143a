"""NEAT genomes for the maze controllers: operators, compatibility, activation."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit

N_INPUTS = 10
BIAS_ID = N_INPUTS
OUTPUT_IDS = (N_INPUTS + 1, N_INPUTS + 2)
FIRST_HIDDEN_ID = N_INPUTS + 3
SIGMOID_SLOPE = 4.9
SMALL_GENOME = 20

ROLES = ("input", "bias", "hidden", "output")


class ControllerFault(RuntimeError):
    """Network produced a non-finite value."""


class NodeGene(NamedTuple):
    id: int
    role: str


class ConnGene(NamedTuple):
    innov: int
    src: int
    dst: int
    weight: float
    enabled: bool


@dataclass(frozen=True)
class Genome:
    nodes: tuple[NodeGene, ...]
    conns: tuple[ConnGene, ...]

    @property
    def hidden_nodes(self) -> int:
        return sum(n.role == "hidden" for n in self.nodes)

    @property
    def enabled_connections(self) -> int:
        return sum(c.enabled for c in self.conns)

    def complexity(self) -> tuple[int, int]:
        return self.hidden_nodes, self.enabled_connections


@dataclass
class NeatConfig:
    weight_mutation_prob: float = 0.8
    weight_perturb_fraction: float = 0.9
    weight_perturb_power: float = 0.5
    weight_init_range: float = 1.0
    add_connection_prob: float = 0.1
    add_node_prob: float = 0.005
    crossover_prob: float = 0.75
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 3.0


ZERO_RATES = NeatConfig(weight_mutation_prob=0.0, add_connection_prob=0.0, add_node_prob=0.0)


@dataclass
class InnovationRegistry:
    """Per-run bookkeeping so identical structural mutations share ids."""

    pairs: dict = field(default_factory=dict)
    splits: dict = field(default_factory=dict)
    next_innov: int = 0
    next_node: int = FIRST_HIDDEN_ID

    def connection(self, src: int, dst: int) -> int:
        key = (src, dst)
        if key not in self.pairs:
            self.pairs[key] = self.next_innov
            self.next_innov += 1
        return self.pairs[key]

    def split(self, innov: int) -> int:
        if innov not in self.splits:
            self.splits[innov] = self.next_node
            self.next_node += 1
        return self.splits[innov]


def _fixed_nodes() -> list[NodeGene]:
    nodes = [NodeGene(i, "input") for i in range(N_INPUTS)]
    nodes.append(NodeGene(BIAS_ID, "bias"))
    nodes += [NodeGene(i, "output") for i in OUTPUT_IDS]
    return nodes


def initial_genome(registry: InnovationRegistry, seed=None, config: NeatConfig | None = None) -> Genome:
    """Inputs and bias fully connected to both outputs, no hidden nodes."""
    rng = np.random.default_rng(seed)
    r = (config or NeatConfig()).weight_init_range
    pairs = [(s, d) for s in range(N_INPUTS + 1) for d in OUTPUT_IDS]
    weights = rng.uniform(-r, r, len(pairs))
    conns = [ConnGene(registry.connection(s, d), s, d, float(w), True) for (s, d), w in zip(pairs, weights)]
    return Genome(tuple(_fixed_nodes()), tuple(sorted(conns)))


def validate(genome: Genome) -> None:
    """Raise ``AssertionError`` if a structural invariant is broken."""
    ids = [n.id for n in genome.nodes]
    assert len(ids) == len(set(ids)), "duplicate node ids"
    roles = [n.role for n in genome.nodes]
    assert roles.count("input") == N_INPUTS and roles.count("bias") == 1 and roles.count("output") == 2
    assert all(r in ROLES for r in roles)
    idset = set(ids)
    innovs = [c.innov for c in genome.conns]
    assert len(innovs) == len(set(innovs)), "duplicate innovation ids"
    enabled_pairs = [(c.src, c.dst) for c in genome.conns if c.enabled]
    assert len(enabled_pairs) == len(set(enabled_pairs)), "duplicate enabled connection"
    role_of = dict(zip(ids, roles))
    for c in genome.conns:
        assert c.src in idset and c.dst in idset, "dangling connection"
        assert role_of[c.dst] in ("hidden", "output"), "connection into an input"
        assert math.isfinite(c.weight)


def mutate(genome: Genome, registry: InnovationRegistry, rates: NeatConfig | None = None, seed=None) -> Genome:
    rates = rates or NeatConfig()
    rng = np.random.default_rng(seed)
    conns = list(genome.conns)
    nodes = list(genome.nodes)

    if rng.random() < rates.weight_mutation_prob and conns:
        n = len(conns)
        perturb = rng.random(n) < rates.weight_perturb_fraction
        delta = rng.uniform(-rates.weight_perturb_power, rates.weight_perturb_power, n)
        fresh = rng.uniform(-rates.weight_init_range, rates.weight_init_range, n)
        w = np.array([c.weight for c in conns])
        w = np.where(perturb, w + delta, fresh).tolist()
        conns = [ConnGene(c.innov, c.src, c.dst, wi, c.enabled) for c, wi in zip(conns, w)]

    if rng.random() < rates.add_connection_prob:
        existing = {(c.src, c.dst) for c in conns}
        targets = [n.id for n in nodes if n.role in ("hidden", "output")]
        cands = [(n.id, t) for n in nodes for t in targets if (n.id, t) not in existing]
        if cands:
            s, d = cands[int(rng.integers(len(cands)))]
            w = float(rng.uniform(-rates.weight_init_range, rates.weight_init_range))
            conns.append(ConnGene(registry.connection(s, d), s, d, w, True))

    if rng.random() < rates.add_node_prob:
        enabled = [i for i, c in enumerate(conns) if c.enabled]
        if enabled:
            i = enabled[int(rng.integers(len(enabled)))]
            old = conns[i]
            node_id = registry.split(old.innov)
            if all(n.id != node_id for n in nodes):
                conns[i] = old._replace(enabled=False)
                nodes.append(NodeGene(node_id, "hidden"))
                conns.append(ConnGene(registry.connection(old.src, node_id), old.src, node_id, 1.0, True))
                conns.append(ConnGene(registry.connection(node_id, old.dst), node_id, old.dst, old.weight, True))

    return Genome(tuple(nodes), tuple(sorted(conns)))


def crossover(parent_a: Genome, parent_b: Genome, seed=None, fitter: str | None = "a") -> Genome:
    """Align genes by innovation id.

    Matching genes come from a random parent; disjoint and excess genes come
    from ``fitter`` (``"a"``, ``"b"``, or ``None`` for a per-gene coin).
    """
    rng = np.random.default_rng(seed)
    ga = {c.innov: c for c in parent_a.conns}
    gb = {c.innov: c for c in parent_b.conns}
    innovs = sorted(ga.keys() | gb.keys())
    coins = rng.random(len(innovs)) < 0.5
    child = []
    for coin, k in zip(coins, innovs):
        a, b = ga.get(k), gb.get(k)
        if a is not None and b is not None:
            child.append(a if coin else b)
        elif a is not None:
            if fitter == "a" or (fitter is None and coin):
                child.append(a)
        elif fitter == "b" or (fitter is None and coin):
            child.append(b)

    hidden = {n.id for n in parent_a.nodes if n.role == "hidden"} | {n.id for n in parent_b.nodes if n.role == "hidden"}
    keep = {c.src for c in child} | {c.dst for c in child}
    if fitter == "a":
        keep |= {n.id for n in parent_a.nodes}
    elif fitter == "b":
        keep |= {n.id for n in parent_b.nodes}
    nodes = _fixed_nodes() + [NodeGene(i, "hidden") for i in sorted(hidden & keep)]
    return Genome(tuple(nodes), tuple(child))


def compatibility(genome_a: Genome, genome_b: Genome, coeffs: NeatConfig | None = None) -> float:
    c = coeffs or NeatConfig()
    ga = {g.innov: g for g in genome_a.conns}
    gb = {g.innov: g for g in genome_b.conns}
    if not ga and not gb:
        return 0.0
    cutoff = min(max(ga, default=-1), max(gb, default=-1))
    matching = ga.keys() & gb.keys()
    unmatched = ga.keys() ^ gb.keys()
    excess = sum(1 for k in unmatched if k > cutoff)
    disjoint = len(unmatched) - excess
    wbar = (math.fsum(abs(ga[k].weight - gb[k].weight) for k in matching) / len(matching)) if matching else 0.0
    n = max(len(ga), len(gb))
    if n < SMALL_GENOME:
        n = 1
    return c.c1 * excess / n + c.c2 * disjoint / n + c.c3 * wbar


# ---------------------------------------------------------------------------
# activation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Network:
    """Dense arrays for a genome. Node index == position in ``node_ids``."""

    node_ids: tuple[int, ...]
    order: np.ndarray
    ptr: np.ndarray
    src: np.ndarray
    weight: np.ndarray
    outputs: np.ndarray

    @property
    def size(self) -> int:
        return len(self.node_ids)

    def fresh_state(self) -> np.ndarray:
        return np.zeros(self.size)


def _evaluation_order(nodes: list[int], incoming: dict[int, list[int]], sources: set[int]) -> list[int]:
    """Topological order over non-input nodes; cycles are broken at the lowest id."""
    pending = {n: {s for s in incoming[n] if s not in sources and s != n} for n in nodes}
    users: dict[int, list[int]] = {n: [] for n in nodes}
    for n, deps in pending.items():
        for s in deps:
            users[s].append(n)
    ready = [n for n in nodes if not pending[n]]
    heapq.heapify(ready)
    done: set[int] = set()
    order = []
    while len(order) < len(nodes):
        if not ready:
            heapq.heappush(ready, min(n for n in nodes if n not in done))
        n = heapq.heappop(ready)
        if n in done:
            continue
        done.add(n)
        order.append(n)
        for u in users[n]:
            if u in done:
                continue
            pending[u].discard(n)
            if not pending[u]:
                heapq.heappush(ready, u)
    return order


def compile_network(genome: Genome) -> Network:
    ids = tuple(sorted(n.id for n in genome.nodes))
    index = {nid: i for i, nid in enumerate(ids)}
    n_src = N_INPUTS + 1
    compute = list(ids[n_src:])
    incoming: dict[int, list[tuple[int, float]]] = {nid: [] for nid in compute}
    for c in genome.conns:
        if c.enabled:
            incoming[c.dst].append((c.src, c.weight))
    hidden_edges = any(s >= n_src for e in incoming.values() for s, _ in e)
    if hidden_edges:
        order = _evaluation_order(compute, {n: [s for s, _ in e] for n, e in incoming.items()}, set(ids[:n_src]))
    else:
        order = compute
    ptr = [0]
    src: list[int] = []
    weight: list[float] = []
    for nid in order:
        for s, w in incoming[nid]:
            src.append(index[s])
            weight.append(w)
        ptr.append(len(src))
    return Network(
        node_ids=ids,
        order=np.array([index[n] for n in order], dtype=np.int64),
        ptr=np.array(ptr, dtype=np.int64),
        src=np.array(src, dtype=np.int64),
        weight=np.array(weight, dtype=float),
        outputs=np.array([index[o] for o in OUTPUT_IDS], dtype=np.int64),
    )


@njit(cache=True)
def activate_arrays(values, inputs, order, ptr, src, weight, outputs):
    """One in-place pass; returns False if any node sum is non-finite."""
    for i in range(inputs.shape[0]):
        values[i] = inputs[i]
    values[N_INPUTS] = 1.0
    for k in range(order.shape[0]):
        acc = 0.0
        for e in range(ptr[k], ptr[k + 1]):
            acc += weight[e] * values[src[e]]
        if not math.isfinite(acc):
            return False
        values[order[k]] = 1.0 / (1.0 + math.exp(-SIGMOID_SLOPE * acc))
    return True


def activate(net: Network | Genome, inputs, state: np.ndarray | None = None) -> tuple[float, float]:
    """Propagate ``inputs`` once through the network, mutating ``state`` in place."""
    if isinstance(net, Genome):
        net = compile_network(net)
    if state is None:
        state = net.fresh_state()
    x = np.asarray(inputs, dtype=float)
    if x.shape != (N_INPUTS,) or not np.all(np.isfinite(x)):
        raise ValueError("expected 10 finite inputs")
    if not activate_arrays(state, x, net.order, net.ptr, net.src, net.weight, net.outputs):
        raise ControllerFault("non-finite activation")
    o1, o2 = state[net.outputs[0]], state[net.outputs[1]]
    return min(max(o1, 0.0), 1.0), min(max(o2, 0.0), 1.0)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def serialize_genome(genome: Genome) -> str:
    lines = [f"node {n.id} {n.role}" for n in genome.nodes]
    lines += [f"conn {c.innov} {c.src} {c.dst} {c.weight!r} {int(c.enabled)}" for c in genome.conns]
    return "\n".join(lines) + "\n"


def parse_genome(text: str) -> Genome:
    nodes, conns = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "node" and len(parts) == 3 and parts[2] in ROLES:
                nodes.append(NodeGene(int(parts[1]), parts[2]))
            elif parts[0] == "conn" and len(parts) == 6:
                conns.append(ConnGene(int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4]), parts[5] == "1"))
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"line {lineno}: malformed genome record {line!r}") from None
    return Genome(tuple(nodes), tuple(conns))
