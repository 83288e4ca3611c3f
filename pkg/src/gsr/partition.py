"""r-partitions: node groups whose complements act as hubs for them."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .constructions import ConstructionError, FParams, _add_hub_block
from .graph import Graph, is_connected
from .plan import MeasurementPlan, PlanBuilder


class PartitionError(ValueError):
    pass


class PartitionNotFound(PartitionError):
    def __init__(self, attempts: int):
        super().__init__(f"no valid 2-partition in {attempts} random splits")
        self.attempts = attempts


@dataclass
class PartitionReport:
    ok: bool
    group: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def is_r_partition(g: Graph, groups: Sequence[Sequence[int]]) -> PartitionReport:
    """Check that the groups cover ``V`` disjointly and that for every group
    the complement is connected and touches each of its members.

    On failure the report names the first offending group and condition.
    """
    seen: set[int] = set()
    for i, grp in enumerate(groups):
        s = set(grp)
        if not s:
            return PartitionReport(False, i, "empty group")
        if s & seen:
            return PartitionReport(False, i, "groups overlap")
        seen |= s
    if seen != set(range(g.n)):
        return PartitionReport(False, None, "groups do not cover every node")
    for i, grp in enumerate(groups):
        s = set(grp)
        rest = [v for v in range(g.n) if v not in s]
        if not rest:
            return PartitionReport(False, i, "complement is empty")
        if not is_connected(g, rest):
            return PartitionReport(False, i, "complement is disconnected")
        for u in sorted(s):
            if not any(w not in s for w in g.neighbors(u)):
                return PartitionReport(False, i, f"node {u} has no neighbor in the complement")
    return PartitionReport(True)


def construct_from_partition(g: Graph, groups: Sequence[Sequence[int]], k: int,
                             f: FParams = FParams()) -> MeasurementPlan:
    """One hub block per group with the complement as hub: ``sum f(k,|N_i|) + r`` rows."""
    report = is_r_partition(g, groups)
    if not report:
        raise PartitionError(f"not an r-partition (group {report.group}: {report.reason})")
    rng = np.random.default_rng(f.seed)
    b = PlanBuilder(g.n, k, "partition")
    for i, grp in enumerate(groups):
        s = set(grp)
        _add_hub_block(b, sorted(s), [v for v in range(g.n) if v not in s], k, f, rng,
                       label=f"N{i}")
    return b.build()


@dataclass
class TwoPartition:
    groups: tuple[tuple[int, ...], tuple[int, ...]]
    attempts: int


def er_random_2partition(g: Graph, seed=0, trials: int = 20) -> TwoPartition:
    """Try random equal halves until one is a valid 2-partition.

    Raises :class:`PartitionNotFound` once ``trials`` splits have failed.
    """
    if trials < 1:
        raise PartitionError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    for attempt in range(1, trials + 1):
        perm = rng.permutation(g.n)
        half = g.n // 2
        groups = (tuple(sorted(perm[:half].tolist())), tuple(sorted(perm[half:].tolist())))
        if is_r_partition(g, groups):
            return TwoPartition(groups, attempt)
    raise PartitionNotFound(trials)


def dumps_partition(groups: Sequence[Sequence[int]]) -> str:
    return "".join(" ".join(str(v) for v in sorted(grp)) + "\n" for grp in groups)


def loads_partition(text: str) -> list[list[int]]:
    return [[int(v) for v in line.split()] for line in text.splitlines()
            if line.strip() and not line.lstrip().startswith("#")]


def save_partition(groups, path) -> None:
    Path(path).write_text(dumps_partition(groups))


def load_partition(path) -> list[list[int]]:
    return loads_partition(Path(path).read_text())
