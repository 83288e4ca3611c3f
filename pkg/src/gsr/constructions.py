"""Measurement designs for lines, rings, G4 rings, grids and trees, the
complete-graph baseline, and the hub-based assembly they all share."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graph import (Graph, GraphError, bfs_spanning_tree, gen_complete, gen_g4, gen_g4_minus,
                    gen_grid, grid_node, is_connected, is_hub, is_tree)
from .plan import MeasurementPlan, PlanBuilder
from .verification import DEFAULT_SUBSET_BUDGET, check_identifiability, distinct_nonzero_columns


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class FParams:
    """Settings for the complete-graph baseline used inside every hub block.

    ``c`` scales the random row budget for ``k >= 2``; random blocks are
    redrawn up to ``max_retries`` times until the exact oracle passes,
    whenever ``C(n, 2k)`` fits in ``budget``.
    """

    c: float = 2.0
    seed: int = 0
    max_retries: int = 50
    verify: bool = True
    budget: int = DEFAULT_SUBSET_BUDGET


def f_rows(n: int, k: int, c: float = 2.0) -> int:
    """Row count ``f(k, n)`` of the complete-graph baseline.

    ``ceil(log2(n+1))`` for ``k = 1``; otherwise ``ceil(c*2k*log2(n/(2k)+2))``
    capped at ``n`` (direct measurement is never worse).
    """
    if n < 1 or k < 1:
        raise ConstructionError("f(k, n) needs n >= 1 and k >= 1")
    if k == 1:
        return n.bit_length()
    return min(n, math.ceil(c * 2 * k * math.log2(n / (2 * k) + 2)))


def _rng(f: FParams, rng) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(f.seed)


def complete_design(n: int, k: int, f: FParams = FParams(),
                    rng: np.random.Generator | None = None) -> tuple[list[list[int]], bool | None]:
    """Row supports (as column indices ``0..n-1``) identifying ``k``-sparse vectors
    on an unconstrained set of ``n`` nodes, plus the verification flag."""
    rng = _rng(f, rng)
    if k == 1:
        # column j carries the binary expansion of j + 1
        bits = n.bit_length()
        return [[j for j in range(n) if (j + 1) >> b & 1] for b in range(bits)], True
    m = f_rows(n, k, f.c)
    if m == n:
        return [[j] for j in range(n)], True
    checkable = f.verify and math.comb(n, min(2 * k, n)) <= f.budget
    for _ in range(f.max_retries):
        A = (rng.random((m, n)) < 0.5).astype(np.int8)
        if not A.any(axis=1).all() or not A.any(axis=0).all():
            continue
        if not checkable:
            return [np.flatnonzero(r).tolist() for r in A], None
        if check_identifiability(A, k, budget=f.budget).verdict:
            return [np.flatnonzero(r).tolist() for r in A], True
    raise ConstructionError(f"no identifying {m}x{n} random design for k={k} "
                            f"after {f.max_retries} draws; raise c or max_retries")


def construct_complete(n: int, k: int, c: float = 2.0, seed: int = 0,
                       f: FParams | None = None) -> MeasurementPlan:
    """The ``f(k, n)`` baseline as a plan on the complete graph ``K_n``."""
    f = f or FParams(c=c, seed=seed)
    rows, verified = complete_design(n, k, f)
    b = PlanBuilder(n, k, "complete")
    gid = b.add_group(range(n), label="all")
    for r in rows:
        b.add_row(gid, r)
    b.note_verified(verified)
    return b.build()


def _add_hub_block(b: PlanBuilder, target: Sequence[int], hub: Iterable[int], k: int,
                   f: FParams, rng, order: int = 0, label: str = "",
                   measure_hub: bool = True) -> int:
    target = sorted(target)
    hub = sorted(set(hub))
    gid = b.add_group(target, recovery_order=order, label=label)
    if measure_hub:
        b.add_hub_sum_row(gid, hub)
    rows, verified = complete_design(len(target), k, f, rng)
    b.note_verified(verified)
    for r in rows:
        b.add_row(gid, [target[j] for j in r], hub)
    return gid


def construct_hub_based(g: Graph, target: Iterable[int], hub: Iterable[int], k: int,
                        f: FParams = FParams(), rng=None) -> MeasurementPlan:
    """One hub-sum row plus ``f(k, |target|)`` rows of the form ``W | hub``.

    The returned plan covers ``target`` only.
    """
    target, hub = sorted(set(target)), sorted(set(hub))
    if set(target) & set(hub):
        raise ConstructionError("target and hub overlap")
    if not target:
        raise ConstructionError("empty target")
    if not is_hub(g, hub, target):
        raise ConstructionError("hub set is disconnected or misses a target neighbor")
    b = PlanBuilder(g.n, k, "hub")
    _add_hub_block(b, target, hub, k, f, _rng(f, rng), label="target")
    return b.build(require_cover=False)


# ---------------------------------------------------------------------------
# line and ring
# ---------------------------------------------------------------------------

def construct_line_k(n: int, k: int) -> MeasurementPlan:
    """Sliding windows of length ``t = ceil(n/(k+1))``; ``k*t + 1`` rows.

    Row ``i`` covers nodes ``i .. min(i+t-1, n-1)``. When ``k*t + 1 > n`` the
    trailing windows would start past the last node; those empty rows are
    dropped. Rows are intervals, so the plan is feasible on the ring too.
    """
    if k < 2:
        raise ConstructionError("use construct_line_1 for k = 1")
    if n < k + 1:
        raise ConstructionError(f"need n >= k+1, got n={n}, k={k}")
    t = -(-n // (k + 1))
    b = PlanBuilder(n, k, "line_k")
    gid = b.add_group(range(n), label="all")
    for i in range(min(k * t + 1, n)):
        b.add_row(gid, range(i, min(i + t, n)))
    return b.build()


def construct_line_1(n: int) -> MeasurementPlan:
    """``ceil((n+1)/2)`` overlapping intervals identifying 1-sparse vectors.

    Intervals ``{0,1}``, ``{1,2,3}``, ``{3,4,5}``, ...: odd nodes sit in two
    consecutive intervals, even nodes in one, so all column codes differ.
    """
    if n < 2:
        raise ConstructionError("need n >= 2")
    b = PlanBuilder(n, 1, "line_1")
    gid = b.add_group(range(n), label="all")
    b.add_row(gid, [0, 1])
    for j in range(1, n // 2 + 1):
        b.add_row(gid, [v for v in (2 * j - 1, 2 * j, 2 * j + 1) if v < n])
    plan = b.build()
    if not distinct_nonzero_columns(plan.dense()):
        raise ConstructionError("interval chain failed the distinct-columns check")
    return plan


# ---------------------------------------------------------------------------
# G4 ring, with or without deleted chords
# ---------------------------------------------------------------------------

def construct_g4_minus(n: int, deleted: Iterable[int], k: int,
                       f: FParams = FParams(), method: str = "g4_minus") -> MeasurementPlan:
    """Plan for ``gen_g4_minus(n, deleted)``.

    Each chord midpoint in ``deleted`` is measured directly. The remaining
    odd ids use all even ids plus the directly measured odd ids as hub, and
    symmetrically for the even ids. (Odd 0-based ids are the even nodes in
    1-based numbering, hence the group labels.)
    """
    D = sorted(set(deleted))
    g = gen_g4_minus(n, D)
    rng = _rng(f, None)
    b = PlanBuilder(n, k, method)
    if D:
        gid = b.add_group(D, label="direct")
        for v in D:
            b.add_row(gid, [v])
    in_d = set(D)
    odd_ids = [v for v in range(n) if v % 2 == 1]
    even_ids = [v for v in range(n) if v % 2 == 0]
    for label, own, other in (("evens", odd_ids, even_ids), ("odds", even_ids, odd_ids)):
        target = [v for v in own if v not in in_d]
        if not target:
            continue
        hub = other + [v for v in own if v in in_d]
        if not is_hub(g, hub, target):
            raise ConstructionError(f"n={n}: {label} hub fails the hub conditions")
        _add_hub_block(b, target, hub, k, f, rng, label=label)
    return b.build()


def construct_g4(n: int, k: int, f: FParams = FParams()) -> MeasurementPlan:
    """Odd and even ids each serve as hub for the other: ``f(k,floor(n/2)) + f(k,ceil(n/2)) + 2`` rows."""
    return construct_g4_minus(n, (), k, f, method="g4")


def sample_markov_rows(n: int, num_rows: int, seed=0) -> MeasurementPlan:
    """Rows drawn from the 0/1 chain that starts at 1, always follows a 0 with
    a 1, and otherwise flips a fair coin. No row contains two adjacent zeros,
    so every row is connected on the G4 ring."""
    if n < 3 or num_rows < 1:
        raise ConstructionError("need n >= 3 and num_rows >= 1")
    rng = np.random.default_rng(seed)
    coins = rng.random((num_rows, n)) < 0.5
    g = gen_g4(n) if n >= 5 else gen_complete(n)
    b = PlanBuilder(n, 1, "markov")
    gid = b.add_group(range(n), label="all")
    for r in range(num_rows):
        state = [1] * n
        for j in range(1, n):
            state[j] = 1 if state[j - 1] == 0 else int(coins[r, j])
        row = [j for j in range(n) if state[j]]
        if not is_connected(g, row):
            raise ConstructionError("markov row is infeasible on G4")
        b.add_row(gid, row)
    b.verified = None
    return b.build()


# ---------------------------------------------------------------------------
# grid and tree
# ---------------------------------------------------------------------------

def construct_grid(side: int, k: int, f: FParams = FParams()) -> MeasurementPlan:
    """Three hub stages on the ``side x side`` grid.

    Stage 0: row 0 plus the even (0-based) columns is the hub for the rest.
    Stage 1: row 0 plus the odd columns is the hub for the rest.
    Stage 2: row 1, already recovered, is the hub for row 0; no hub-sum row.
    """
    g = gen_grid(side)
    rng = _rng(f, None)
    b = PlanBuilder(side * side, k, "grid")
    top = [grid_node(side, 0, c) for c in range(side)]
    for stage, parity in ((0, 0), (1, 1)):
        hub = top + [grid_node(side, r, c) for r in range(1, side) for c in range(side) if c % 2 == parity]
        target = [grid_node(side, r, c) for r in range(1, side) for c in range(side) if c % 2 != parity]
        if not target:
            continue
        if not is_hub(g, hub, target):
            raise ConstructionError(f"grid stage {stage} hub check failed")
        _add_hub_block(b, target, hub, k, f, rng, order=stage, label=f"stage{stage}")
    second = [grid_node(side, 1, c) for c in range(side)]
    _add_hub_block(b, top, second, k, f, rng, order=2, label="stage2", measure_hub=False)
    return b.build()


def tree_layers(parent: dict[int, int | None], root: int) -> list[list[int]]:
    """Nodes grouped by depth below ``root``, ascending ids within a layer.

    ``parent`` must list every parent before its children (BFS order).
    """
    depth = {root: 0}
    for v, p in parent.items():
        if p is not None:
            depth[v] = depth[p] + 1
    layers: list[list[int]] = [[] for _ in range(max(depth.values()) + 1)]
    for v in sorted(depth):
        layers[depth[v]].append(v)
    return layers


def tree_hub(parent: dict[int, int | None], nodes: Iterable[int]) -> set[int]:
    """Ancestors of same-depth ``nodes`` traced up until they meet, meeting node included."""
    current = set(nodes)
    hub: set[int] = set()
    while len(current) > 1:
        current = {parent[v] for v in current}
        if None in current:
            raise ConstructionError("nodes do not share a depth")
        hub |= current
    return hub


def construct_tree(g: Graph, root: int, k: int, f: FParams = FParams()) -> MeasurementPlan:
    """Layer-by-layer plan: ``sum_i f(k, n_i)`` rows, one group per depth."""
    if not is_tree(g):
        raise ConstructionError("input graph is not a tree")
    parent = bfs_spanning_tree(g, root)
    layers = tree_layers(parent, root)
    rng = _rng(f, None)
    b = PlanBuilder(g.n, k, "tree")
    for depth, layer in enumerate(layers):
        gid = b.add_group(layer, recovery_order=depth, label=f"layer{depth}")
        rows, verified = complete_design(len(layer), k, f, rng)
        b.note_verified(verified)
        for r in rows:
            W = [layer[j] for j in r]
            b.add_row(gid, W, tree_hub(parent, W))
    return b.build()
