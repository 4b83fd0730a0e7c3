from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morsesmale.errors import CycleDetected
from morsesmale.order import (OrderGraph, beh_relative, build_order_graph, compute_beh, decompose_layers,
                              find_cycle, to_dot)

from .oracles import longest_path_by_enumeration, random_dag


def saddle_graph(n, edges):
    return OrderGraph({i: "saddle" for i in range(n)}, {i: 1 for i in range(n)},
                      {e: ["w"] for e in edges})


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 10), st.floats(0.0, 0.9), st.integers(0, 2**32 - 1))
def test_beh_matches_path_enumeration(n, p, seed):
    edges = random_dag(np.random.default_rng(seed), n, p)
    g = saddle_graph(n, edges)
    assert compute_beh(g) == longest_path_by_enumeration(range(n), edges)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10), st.floats(0.0, 0.9), st.integers(0, 2**32 - 1))
def test_layers_are_consistent_with_beh(n, p, seed):
    edges = random_dag(np.random.default_rng(seed), n, p)
    g = saddle_graph(n, edges)
    layers = decompose_layers(g)
    saddle_layers = layers[1:-1]
    assert len(saddle_layers) == compute_beh(g) + 1
    assert sorted(x for L in saddle_layers for x in L) == list(range(n))
    level = {x: k for k, L in enumerate(saddle_layers) for x in L}
    for j, i in edges:
        assert level[j] > level[i]
    # every saddle above the bottom layer has a successor exactly one layer down
    for x, k in level.items():
        if k > 0:
            assert any(level[i] == k - 1 for i in g.saddle_successors(x))


def test_cycles_are_detected():
    assert find_cycle(range(3), [(0, 1), (1, 2)]) is None
    cyc = find_cycle(range(4), [(0, 1), (1, 2), (2, 3), (3, 1)])
    assert cyc[0] == cyc[-1] and set(cyc) == {1, 2, 3}
    with pytest.raises(CycleDetected):
        compute_beh(saddle_graph(2, [(0, 1), (1, 0)]))
    with pytest.raises(CycleDetected):
        compute_beh(saddle_graph(1, [(0, 0)]))


def test_build_order_graph_with_sinks_and_sources():
    class O:
        def __init__(self, id, kind):
            self.id, self.kind, self.period = id, kind, 1

    orbits = [O(0, "sink"), O(1, "saddle"), O(2, "saddle"), O(3, "saddle"), O(4, "source")]
    g = build_order_graph(orbits, {(3, 2): ["a"], (2, 1): ["b"]},
                          {(1, 0): ["1u+"], (4, 3): ["3s+"], (2, 0): []})
    assert g.beh == 2
    assert g.layers == [[0], [1], [2], [3], [4]]
    assert (2, 0) not in g.edges
    assert beh_relative(g, 3, [0]) == 3 and beh_relative(g, 1, [4]) == 0
    with pytest.raises(CycleDetected):
        build_order_graph(orbits, {(1, 2): ["a"], (2, 1): ["b"]}, {})


def test_no_saddle_connections_gives_zero():
    g = saddle_graph(3, [])
    assert compute_beh(g) == 0
    assert decompose_layers(g) == [[], [0, 1, 2], []]
    assert compute_beh(OrderGraph({0: "sink"}, {0: 1})) == 0


def test_dot_output():
    g = saddle_graph(2, [(1, 0)])
    dot = to_dot(g, "demo")
    assert dot.startswith('digraph "demo"') and "o1 -> o0" in dot and "shape=diamond" in dot


def test_catalog_layers(report):
    r = report("nonorientable-chain")
    assert r.graph.layers[1:-1] == [[1, 9, 12, 14], [6, 11], [3, 4]]
    assert sorted(r.graph.saddle_edges()) == [(3, 6), (3, 9), (4, 11), (4, 14), (6, 9), (11, 14)]
