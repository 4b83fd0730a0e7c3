"""The Smale order on periodic orbits, ``beh``, and the saddle layering.

Edges point from the upper orbit to the lower one: ``j -> i`` records
``O_i < O_j``, i.e. ``W^s(O_i)`` meets ``W^u(O_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .errors import CycleDetected


@dataclass
class OrderGraph:
    kinds: dict[int, str]
    periods: dict[int, int]
    edges: dict[tuple[int, int], list] = field(default_factory=dict)
    beh: int = 0
    layers: list[list[int]] = field(default_factory=list)

    def successors(self, j: int) -> list[int]:
        return sorted(i for (a, i) in self.edges if a == j)

    def saddle_successors(self, j: int) -> list[int]:
        return [i for i in self.successors(j) if self.kinds[i] == "saddle"]

    @property
    def saddles(self) -> list[int]:
        return sorted(k for k, v in self.kinds.items() if v == "saddle")

    def saddle_edges(self) -> list[tuple[int, int]]:
        return sorted((j, i) for (j, i) in self.edges
                      if self.kinds[j] == "saddle" and self.kinds[i] == "saddle")


def find_cycle(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> list[int] | None:
    """Return one directed cycle as a node list, or ``None`` for a DAG."""
    adj: dict[int, list[int]] = {n: [] for n in nodes}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, [])
    color = {n: 0 for n in adj}
    stack_path: list[int] = []

    for root in sorted(adj):
        if color[root]:
            continue
        stack = [(root, iter(sorted(adj[root])))]
        color[root] = 1
        stack_path.append(root)
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                stack_path.pop()
            elif color[nxt] == 1:
                return stack_path[stack_path.index(nxt):] + [nxt]
            elif color[nxt] == 0:
                color[nxt] = 1
                stack_path.append(nxt)
                stack.append((nxt, iter(sorted(adj[nxt]))))
    return None


def build_order_graph(orbits: Sequence, heteroclinic_witnesses: Mapping[tuple[int, int], list],
                      basin_tests: Mapping[tuple[int, int], list]) -> OrderGraph:
    """Assemble the order graph.

    ``heteroclinic_witnesses`` maps ``(from_saddle, to_saddle)`` (owner of
    ``W^u``, owner of ``W^s``) to heteroclinic orbit representatives;
    ``basin_tests`` maps ``(upper, lower)`` pairs involving a sink or source
    to separatrix ids that ended in the corresponding linearizing box.
    """
    kinds = {o.id: o.kind for o in orbits}
    periods = {o.id: o.period for o in orbits}
    g = OrderGraph(kinds, periods)
    for key, wit in list(heteroclinic_witnesses.items()) + list(basin_tests.items()):
        if wit:
            g.edges.setdefault(tuple(key), []).extend(wit)
    cyc = find_cycle(kinds, g.edges)
    if cyc is not None:
        raise CycleDetected(f"orbits form a cycle {cyc}: not Morse-Smale")
    g.beh = compute_beh(g)
    g.layers = decompose_layers(g)
    return g


def _longest_down(g: OrderGraph, only_saddles: bool):
    @lru_cache(maxsize=None)
    def depth(j: int) -> int:
        nxt = g.saddle_successors(j) if only_saddles else g.successors(j)
        return max((1 + depth(i) for i in nxt), default=0)
    return depth


def compute_beh(g: OrderGraph) -> int:
    """Length, in edges, of the longest saddle chain; 0 when saddles are unconnected."""
    cyc = find_cycle(g.kinds, g.edges)
    if cyc is not None:
        raise CycleDetected(f"orbits form a cycle {cyc}")
    depth = _longest_down(g, True)
    return max((depth(s) for s in g.saddles), default=0)


def beh_relative(g: OrderGraph, orbit: int, targets: Iterable[int]) -> int:
    """Longest chain from ``orbit`` down to any orbit of ``targets`` (0 if none is reachable)."""
    targets = set(targets)

    @lru_cache(maxsize=None)
    def best(j: int) -> int:
        vals = []
        for i in g.successors(j):
            if i in targets:
                vals.append(1)
            sub = best(i)
            if sub > 0:
                vals.append(1 + sub)
        return max(vals, default=0)

    return best(orbit)


def decompose_layers(g: OrderGraph) -> list[list[int]]:
    """``[sinks, Sigma_1, ..., Sigma_L, sources]``; saddle layer = 1 + longest saddle chain below."""
    depth = _longest_down(g, True)
    sinks = sorted(k for k, v in g.kinds.items() if v == "sink")
    sources = sorted(k for k, v in g.kinds.items() if v == "source")
    saddle_layers: dict[int, list[int]] = {}
    for s in g.saddles:
        saddle_layers.setdefault(depth(s) + 1, []).append(s)
    n = max(saddle_layers, default=0)
    return [sinks] + [sorted(saddle_layers.get(i, [])) for i in range(1, n + 1)] + [sources]


def to_dot(g: OrderGraph, name: str = "order") -> str:
    lines = [f'digraph "{name}" {{', "  rankdir=TB;"]
    shapes = {"sink": "circle", "saddle": "diamond", "source": "doublecircle"}
    for k in sorted(g.kinds):
        lines.append(f'  o{k} [label="{g.kinds[k]} {k}\\nperiod {g.periods[k]}", shape={shapes[g.kinds[k]]}];')
    for (j, i) in sorted(g.edges):
        lines.append(f'  o{j} -> o{i} [label="{len(g.edges[(j, i)])}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
