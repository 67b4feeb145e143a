import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mazeqd.neat import (ZERO_RATES, ConnGene, ControllerFault, Genome, InnovationRegistry, NeatConfig, NodeGene,
                         activate, compatibility, compile_network, crossover, initial_genome, mutate, parse_genome,
                         serialize_genome, validate)

import oracles

ADD_NODE = NeatConfig(weight_mutation_prob=0.0, add_connection_prob=0.0, add_node_prob=1.0)
ADD_CONN = NeatConfig(weight_mutation_prob=0.0, add_connection_prob=1.0, add_node_prob=0.0)
GROW = NeatConfig(add_connection_prob=0.5, add_node_prob=0.3)


def evolve(seed, steps=10, registry=None):
    reg = registry or InnovationRegistry()
    rng = np.random.default_rng(seed)
    g = initial_genome(reg, rng)
    for _ in range(steps):
        g = mutate(g, reg, GROW, rng)
    return g, reg


def test_initial_topology():
    g = initial_genome(InnovationRegistry(), 0)
    validate(g)
    assert len(g.conns) == 22 and g.hidden_nodes == 0 and g.enabled_connections == 22


def test_initial_seeds_differ_only_in_weights():
    a = initial_genome(InnovationRegistry(), 1)
    b = initial_genome(InnovationRegistry(), 2)
    assert [(c.innov, c.src, c.dst) for c in a.conns] == [(c.innov, c.src, c.dst) for c in b.conns]
    assert [c.weight for c in a.conns] != [c.weight for c in b.conns]


def test_initial_weights_bounded():
    reg = InnovationRegistry()
    w = [c.weight for s in range(1000) for c in initial_genome(reg, s).conns]
    assert min(w) >= -1.0 and max(w) <= 1.0


def test_zero_rates_identity():
    reg = InnovationRegistry()
    g = initial_genome(reg, 3)
    assert mutate(g, reg, ZERO_RATES, 5) == g


def test_add_node_operator():
    reg = InnovationRegistry()
    g = mutate(initial_genome(reg, 0), reg, ADD_NODE, 1)
    validate(g)
    assert g.hidden_nodes == 1
    assert g.enabled_connections == 23
    assert sum(not c.enabled for c in g.conns) == 1
    old = next(c for c in g.conns if not c.enabled)
    hid = next(n.id for n in g.nodes if n.role == "hidden")
    into = next(c for c in g.conns if c.dst == hid)
    out = next(c for c in g.conns if c.src == hid)
    assert (into.src, into.weight) == (old.src, 1.0)
    assert (out.dst, out.weight) == (old.dst, old.weight)


def test_same_mutation_reuses_innovation():
    reg = InnovationRegistry()
    base = initial_genome(reg, 0)
    a = mutate(base, reg, ADD_NODE, 7)
    b = mutate(base, reg, ADD_NODE, 7)
    assert a == b
    ia = {(c.src, c.dst): c.innov for c in a.conns}
    # an independently grown genome splitting the same gene gets the same ids
    c = mutate(initial_genome(reg, 99), reg, ADD_NODE, 7)
    ic = {(x.src, x.dst): x.innov for x in c.conns}
    assert ia == ic
    assert reg.connection(0, 11) == reg.connection(0, 11)


def test_add_connection_respects_registry_and_saturation():
    reg = InnovationRegistry()
    g = mutate(initial_genome(reg, 0), reg, ADD_NODE, 1)
    g2 = mutate(g, reg, ADD_CONN, 2)
    validate(g2)
    assert len(g2.conns) == len(g.conns) + 1
    new = next(c for c in g2.conns if c.innov not in {x.innov for x in g.conns})
    assert reg.connection(new.src, new.dst) == new.innov
    # recurrent links (output->output, self-loops) are allowed, so saturation takes a few more links
    reg = InnovationRegistry()
    sat = initial_genome(reg, 0)
    for s in range(10):
        sat = mutate(sat, reg, ADD_CONN, s)
    assert len(sat.conns) == 13 * 2
    assert mutate(sat, reg, ADD_CONN, 11) == sat


def test_self_crossover():
    g, _ = evolve(4, 15)
    c = crossover(g, g, 3)
    assert [(x.innov, x.src, x.dst, x.enabled) for x in c.conns] == [(x.innov, x.src, x.dst, x.enabled) for x in g.conns]
    assert c.nodes == g.nodes


def test_crossover_fitter_structure():
    reg = InnovationRegistry()
    root = initial_genome(reg, 0)
    rng = np.random.default_rng(1)
    a = mutate(mutate(root, reg, ADD_NODE, rng), reg, ADD_NODE, rng)
    b = mutate(root, reg, ADD_CONN, rng)
    child = crossover(a, b, 5, fitter="a")
    assert [x.innov for x in child.conns] == [x.innov for x in a.conns]
    assert {n.id for n in child.nodes} == {n.id for n in a.nodes}


def test_random_crossovers_valid():
    rng = np.random.default_rng(0)
    reg = InnovationRegistry()
    pool = [evolve(s, 8, reg)[0] for s in range(20)]
    for t in range(500):
        a, b = pool[rng.integers(20)], pool[rng.integers(20)]
        child = crossover(a, b, rng, fitter=["a", "b", None][t % 3])
        validate(child)
        validate(mutate(child, reg, GROW, rng))


def test_compatibility_identity_and_formula():
    g, _ = evolve(1, 5)
    assert compatibility(g, g) == 0.0
    conns = list(g.conns)
    conns[0] = conns[0]._replace(weight=conns[0].weight + 0.3)
    h = Genome(g.nodes, tuple(conns))
    m = len(g.conns)
    assert compatibility(g, h) == pytest.approx(3.0 * 0.3 / m)


def test_compatibility_excess_disjoint():
    reg = InnovationRegistry()
    base = initial_genome(reg, 0)
    a = mutate(base, reg, ADD_NODE, 1)  # adds two higher innovations
    d = compatibility(base, a)
    # two excess genes over 24; the split gene still matches with an unchanged weight
    n = max(len(base.conns), len(a.conns))
    assert d == pytest.approx(2 / n)


def test_compatibility_symmetric():
    rng = np.random.default_rng(2)
    reg = InnovationRegistry()
    pool = [evolve(s, 6, reg)[0] for s in range(40)]
    for _ in range(1000):
        a, b = pool[rng.integers(40)], pool[rng.integers(40)]
        assert compatibility(a, b) == compatibility(b, a)


def test_zero_weight_outputs_half():
    g = initial_genome(InnovationRegistry(), 0)
    z = Genome(g.nodes, tuple(c._replace(weight=0.0) for c in g.conns))
    assert activate(z, np.ones(10)) == (0.5, 0.5)


def test_single_connection():
    nodes = tuple([NodeGene(i, "input") for i in range(10)] + [NodeGene(10, "bias"), NodeGene(11, "output"),
                                                              NodeGene(12, "output")])
    g = Genome(nodes, (ConnGene(0, 3, 11, 0.7, True),))
    x = np.zeros(10)
    x[3] = 0.4
    o1, o2 = activate(g, x)
    assert o1 == pytest.approx(1 / (1 + math.exp(-4.9 * 0.28)))
    assert o2 == 0.5


def _feedforward(seed):
    rng = np.random.default_rng(seed)
    reg = InnovationRegistry()
    g = initial_genome(reg, rng)
    for _ in range(int(rng.integers(0, 6))):
        g = mutate(g, reg, ADD_NODE, rng)
    # node splits alone never create cycles
    cfg = NeatConfig(weight_mutation_prob=1.0, add_connection_prob=0.0, add_node_prob=0.0)
    return mutate(g, reg, cfg, rng)


def test_activation_matches_matrix_oracle():
    rng = np.random.default_rng(7)
    for s in range(100):
        g = _feedforward(s)
        x = rng.uniform(0, 1, 10)
        got = activate(g, x)
        want = oracles.matrix_activation(g, x)
        assert abs(got[0] - want[0]) < 1e-12 and abs(got[1] - want[1]) < 1e-12


def test_recurrent_state_persists():
    reg = InnovationRegistry()
    g = mutate(initial_genome(reg, 0), reg, ADD_NODE, 0)
    hid = next(n.id for n in g.nodes if n.role == "hidden")
    loop = ConnGene(reg.connection(hid, hid), hid, hid, 2.0, True)
    g = Genome(g.nodes, tuple(sorted(g.conns + (loop,))))
    validate(g)
    net = compile_network(g)
    state = net.fresh_state()
    x = np.full(10, 0.5)
    first = activate(net, x, state)
    second = activate(net, x, state)
    assert first != second


def test_non_finite_activation_faults():
    g = initial_genome(InnovationRegistry(), 0)
    bad = Genome(g.nodes, tuple(c._replace(weight=1e308) for c in g.conns))
    with pytest.raises(ControllerFault):
        activate(bad, np.ones(10))
    with pytest.raises(ValueError):
        activate(g, np.full(10, np.nan))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_operators_preserve_invariants(seed):
    g, reg = evolve(seed, 20)
    validate(g)
    h, _ = evolve(seed + 1, 20, reg)
    validate(crossover(g, h, seed, None))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_genome_text_roundtrip(seed):
    g, _ = evolve(seed, 12)
    back = parse_genome(serialize_genome(g))
    assert back == g
    assert back.complexity() == g.complexity()


def test_genome_parse_error_line():
    with pytest.raises(ValueError, match="line 2"):
        parse_genome("node 0 input\nconn 1 2\n")
