"""Measurement design for arbitrary connected graphs by repeated leaf removal.

Each round roots a BFS tree at a center of the current (reduced) graph,
measures the tree's leaves through the remaining nodes as a hub, then deletes
the leaves. Deleting a node links up all of its neighbors; the hub map
remembers which deleted nodes bridge every such synthetic link, so rows
designed on the reduced graph can be expanded back to connected node sets of
the original graph.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .constructions import FParams, _add_hub_block, construct_tree, f_rows
from .graph import (Graph, GraphError, bfs_spanning_tree, components, induced_subgraph,
                    is_connected, radius_and_center)
from .plan import Group, MeasurementPlan, PlanBuilder, RowMeta

Edge = tuple[int, int]
HubMap = dict[Edge, frozenset]


class ReductionError(RuntimeError):
    pass


def _edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def _as_adj(g) -> dict[int, set[int]]:
    if isinstance(g, Graph):
        return g.adjacency()
    return {v: set(ws) for v, ws in g.items()}


def leaves(g, u: int) -> list[int]:
    """Leaves (childless nodes) of the BFS tree rooted at ``u``."""
    parent = bfs_spanning_tree(g, u)
    has_child = {p for p in parent.values() if p is not None}
    return sorted(v for v in parent if v not in has_child)


def _eager_join(left: frozenset | None, u: int, right: frozenset | None) -> frozenset:
    out = frozenset((u,))
    if left:
        out |= left
    if right:
        out |= right
    return out


# Inside algorithm1 a bridge set is kept as a node ``(u, left, right)`` of a
# shared DAG, so creating a link is O(1); sets are expanded on demand.
def _lazy_join(left, u: int, right):
    return (u, left, right)


def _expand_lazy(bridges, out: set[int], seen: set[int]) -> None:
    stack = list(bridges)
    while stack:
        h = stack.pop()
        if h is None or id(h) in seen:
            continue
        seen.add(id(h))
        out.add(h[0])
        stack.append(h[1])
        stack.append(h[2])


def _reduce_in_place(adj: dict[int, set[int]], hubs: dict, u: int, join=_eager_join) -> None:
    nbrs = sorted(adj[u])
    nbr_set = set(nbrs)
    via = {v: hubs.get(_edge(v, u)) for v in nbrs}
    for v in nbrs:
        adj_v = adj[v]
        missing = nbr_set - adj_v
        missing.discard(v)
        left = via[v]
        for w in sorted(missing):
            adj_v.add(w)
            adj[w].add(v)
            hubs[_edge(v, w)] = join(left, u, via[w])
    for v in nbrs:
        adj[v].discard(u)
        hubs.pop(_edge(u, v), None)
    del adj[u]


def reduce(g, u: int, hubmap: Mapping[Edge, frozenset] | None = None
           ) -> tuple[dict[int, set[int]], HubMap]:
    """Delete ``u`` and join every pair of its non-adjacent neighbors.

    A new link ``(v, w)`` records ``H(v,u) | H(u,w) | {u}``. Links that already
    existed keep their hub set. Inputs are not modified.
    """
    adj = _as_adj(g)
    if u not in adj:
        raise GraphError(f"node {u} not in graph")
    hubs: HubMap = dict(hubmap or {})
    _reduce_in_place(adj, hubs, u)
    return adj, hubs


@dataclass
class IterationRecord:
    index: int
    root: int
    radius: int
    nodes_before: int
    leaves: list[int]
    hub: list[int]
    # None when bridge sets were not tracked (see reduction_trace)
    expanded_hub: list[int] | None
    rows_emitted: int


@dataclass
class ReductionTrace:
    initial_radius: int
    iterations: list[IterationRecord] = field(default_factory=list)
    final_node: int | None = None

    @property
    def group_sizes(self) -> list[int]:
        """Sizes of every group, the final singleton included."""
        return [len(it.leaves) for it in self.iterations] + [1]

    def k1_measurement_count(self) -> int:
        """``sum_i ceil(log2(n_i + 1)) + q`` over the hub groups, plus the last node."""
        sizes = self.group_sizes
        return sum(s.bit_length() for s in sizes[:-1]) + len(sizes)

    def to_jsonl(self) -> str:
        head = {"initial_radius": self.initial_radius, "final_node": self.final_node}
        lines = [json.dumps(head)] + [json.dumps(asdict(it)) for it in self.iterations]
        return "\n".join(lines) + "\n"


def _expanded_hub(adj, hubs: dict, rest: set[int], parent) -> set[int]:
    bridges = []
    for v in rest:
        for w in adj[v]:
            if v < w and w in rest:
                bridges.append(hubs.get((v, w)))
    for s, p in parent.items():
        if s not in rest:
            bridges.append(hubs.get(_edge(s, p)))
    hub = set(rest)
    _expand_lazy(bridges, hub, set())
    return hub


def bridge_sets(hubs: dict) -> HubMap:
    """Materialize algorithm1's lazy bridge DAG as plain frozensets."""
    out = {}
    for e, h in hubs.items():
        nodes: set[int] = set()
        _expand_lazy([h], nodes, set())
        out[e] = frozenset(nodes)
    return out


def algorithm1(g: Graph, k: int, f: FParams = FParams(), check: bool = True
               ) -> tuple[MeasurementPlan, ReductionTrace]:
    """Design at most ``R*f(k,n) + R + 1`` feasible rows for a connected graph.

    Every group's rows share one hub: the reduced-graph non-leaves plus the
    bridge sets of the links they use among themselves and of each leaf's BFS
    parent link. That hub is measured by the group's hub-sum row, so every
    group decodes on its own.

    With ``check`` set, row feasibility on ``g``, connectivity of the reduced
    graph and the strict radius decrease are asserted every round.
    """
    if g.n == 0:
        raise GraphError("empty graph")
    if not is_connected(g, range(g.n)):
        raise GraphError("algorithm1 needs a connected graph; split components first")
    adj = g.adjacency()
    hubs: dict = {}
    rng = np.random.default_rng(f.seed)
    b = PlanBuilder(g.n, k, "algorithm1")
    radius, center = radius_and_center(adj)
    trace = ReductionTrace(initial_radius=radius)
    while len(adj) > 1:
        it = len(trace.iterations)
        parent = bfs_spanning_tree(adj, center)
        S = leaves(adj, center)
        rest = set(adj) - set(S)
        hub = _expanded_hub(adj, hubs, rest, parent)
        start = len(b.rows)
        _add_hub_block(b, S, hub, k, f, rng, order=it, label=f"round{it}")
        if check:
            for r in range(start, len(b.rows)):
                if not is_connected(g, b.rows[r]):
                    raise ReductionError(f"round {it}: row {r} is infeasible on the input graph")
        trace.iterations.append(IterationRecord(it, center, radius, len(adj), S, sorted(rest),
                                                sorted(hub), len(b.rows) - start))
        for s in S:
            _reduce_in_place(adj, hubs, s, _lazy_join)
        if check and not is_connected(adj, adj.keys()):
            raise ReductionError(f"round {it}: reduced graph became disconnected")
        if len(adj) > 1:
            new_radius, center = radius_and_center(adj)
            if check and new_radius >= radius:
                raise ReductionError(f"round {it}: radius did not shrink ({radius} -> {new_radius})")
            radius = new_radius
    (last,) = adj
    gid = b.add_group([last], recovery_order=len(trace.iterations), label="last")
    b.add_row(gid, [last])
    trace.final_node = last
    if check and len(trace.iterations) > trace.initial_radius:
        raise ReductionError("more rounds than the initial radius")
    return b.build(), trace


def _relabel(plan: MeasurementPlan, ids: list[int], n: int) -> MeasurementPlan:
    def mp(vs):
        return tuple(sorted(ids[v] for v in vs))
    return MeasurementPlan(n, plan.k, plan.method, [mp(r) for r in plan.rows],
                           [RowMeta(m.group_id, m.is_hub_sum, mp(m.hub_nodes)) for m in plan.row_meta],
                           [Group(mp(g.members), g.hub_sum_row, g.recovery_order, g.label)
                            for g in plan.groups], plan.verified)


def algorithm1_components(g: Graph, k: int, f: FParams = FParams()
                          ) -> tuple[MeasurementPlan, list[ReductionTrace]]:
    """Run :func:`algorithm1` on every connected component and stack the plans.

    Traces refer to component-local node ids.
    """
    b = PlanBuilder(g.n, k, "algorithm1")
    traces = []
    for comp in components(g):
        sub, ids = induced_subgraph(g, comp)
        plan, trace = algorithm1(sub, k, f)
        b.extend(_relabel(plan, ids, g.n))
        traces.append(trace)
    return b.build(), traces


def _eliminate(adj: dict[int, set[int]], S) -> None:
    """Delete the node set ``S`` at once.

    Eliminating nodes one by one links two survivors exactly when some path
    between them runs through deleted nodes only, whatever the order. So the
    outcome is: the outer neighborhood of each component of ``S`` becomes a
    clique.
    """
    S = set(S)
    seen: set[int] = set()
    for s in S:
        if s in seen:
            continue
        seen.add(s)
        stack = [s]
        border: set[int] = set()
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w in S:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
                else:
                    border.add(w)
        for v in border:
            adj[v] |= border
            adj[v].discard(v)
    for s in S:
        for w in adj.pop(s):
            if w not in S:
                adj[w].discard(s)


def reduction_trace(g: Graph) -> ReductionTrace:
    """The group structure of :func:`algorithm1` without building any rows.

    Skips bridge-set bookkeeping and deletes each round's leaves in one
    step, which yields the same reduced graphs. Meant for counting sweeps.
    """
    if g.n == 0:
        raise GraphError("empty graph")
    if not is_connected(g, range(g.n)):
        raise GraphError("algorithm1 needs a connected graph; split components first")
    adj = g.adjacency()
    radius, center = radius_and_center(adj)
    trace = ReductionTrace(initial_radius=radius)
    while len(adj) > 1:
        it = len(trace.iterations)
        S = leaves(adj, center)
        rest = sorted(set(adj) - set(S))
        trace.iterations.append(IterationRecord(it, center, radius, len(adj), S, rest, None,
                                                len(S).bit_length() + 1))
        _eliminate(adj, S)
        if len(adj) > 1:
            radius, center = radius_and_center(adj)
    (trace.final_node,) = adj
    return trace


def algorithm1_bound(radius: int, n: int, k: int, c: float = 2.0) -> int:
    """``R * f(k, n) + R + 1``."""
    return radius * f_rows(n, k, c) + radius + 1


def spanning_tree_baseline(g: Graph, k: int, f: FParams = FParams()) -> MeasurementPlan:
    """Layered tree design on the BFS spanning tree rooted at a center of ``g``."""
    _, center = radius_and_center(g)
    parent = bfs_spanning_tree(g, center)
    tree = Graph(g.n, [(v, p) for v, p in parent.items() if p is not None])
    plan = construct_tree(tree, center, k, f)
    plan.method = "spanning_tree"
    return plan
