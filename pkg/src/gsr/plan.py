"""The measurement plan: a 0-1 matrix stored as row supports, plus the group
and hub bookkeeping needed to decode it.

Every non-hub row has support ``W | hub_nodes`` where ``W`` lies inside the
row's group. Decoding subtracts the hub contribution, either through the
group's dedicated hub-sum row or through hub values recovered earlier.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class RowMeta:
    group_id: int
    is_hub_sum: bool = False
    hub_nodes: tuple[int, ...] = ()


@dataclass(frozen=True)
class Group:
    members: tuple[int, ...]
    hub_sum_row: int | None = None
    recovery_order: int = 0
    label: str = ""


@dataclass
class MeasurementPlan:
    n: int
    k: int
    method: str
    rows: list[tuple[int, ...]] = field(default_factory=list)
    row_meta: list[RowMeta] = field(default_factory=list)
    groups: list[Group] = field(default_factory=list)
    # True: every randomized block passed the identifiability oracle;
    # None: some block was too large to check; False is never stored.
    verified: bool | None = True

    @property
    def m(self) -> int:
        return len(self.rows)

    def dense(self) -> np.ndarray:
        A = np.zeros((self.m, self.n), dtype=np.int8)
        for i, row in enumerate(self.rows):
            A[i, list(row)] = 1
        return A

    def apply(self, x) -> np.ndarray:
        """Noise-free measurements ``y = A x``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise PlanError(f"expected a vector of length {self.n}, got shape {x.shape}")
        return np.array([x[list(r)].sum() for r in self.rows])

    def apply_noisy(self, x, noise) -> np.ndarray:
        noise = np.asarray(noise, dtype=float)
        if noise.shape != (self.m,):
            raise PlanError(f"expected {self.m} noise values, got shape {noise.shape}")
        return self.apply(x) + noise

    def group_rows(self, gid: int) -> list[int]:
        """Indices of the group's measurement rows, hub-sum row excluded."""
        return [i for i, meta in enumerate(self.row_meta)
                if meta.group_id == gid and not meta.is_hub_sum]

    def validate(self, require_cover: bool = True) -> None:
        """Check the structural invariants; raises :class:`PlanError`."""
        if len(self.rows) != len(self.row_meta):
            raise PlanError("rows and row_meta differ in length")
        owner: dict[int, int] = {}
        for gid, grp in enumerate(self.groups):
            for v in grp.members:
                if v in owner:
                    raise PlanError(f"node {v} in groups {owner[v]} and {gid}")
                owner[v] = gid
            if grp.hub_sum_row is not None:
                if not 0 <= grp.hub_sum_row < self.m:
                    raise PlanError(f"group {gid}: hub_sum_row out of range")
                meta = self.row_meta[grp.hub_sum_row]
                if not meta.is_hub_sum or meta.group_id != gid:
                    raise PlanError(f"group {gid}: row {grp.hub_sum_row} is not its hub-sum row")
        if require_cover and set(owner) != set(range(self.n)):
            raise PlanError("groups do not cover every node")
        for i, (row, meta) in enumerate(zip(self.rows, self.row_meta)):
            if not row:
                raise PlanError(f"row {i} is empty")
            if any(not 0 <= v < self.n for v in row):
                raise PlanError(f"row {i} has out-of-range nodes")
            if list(row) != sorted(set(row)):
                raise PlanError(f"row {i} is not sorted and duplicate-free")
            if not 0 <= meta.group_id < len(self.groups):
                raise PlanError(f"row {i} references unknown group {meta.group_id}")
            if meta.is_hub_sum:
                if self.groups[meta.group_id].hub_sum_row != i:
                    raise PlanError(f"row {i} flagged hub-sum but group disagrees")
                continue
            hub = set(meta.hub_nodes)
            if not hub <= set(row):
                raise PlanError(f"row {i}: hub nodes not contained in the row")
            members = set(self.groups[meta.group_id].members)
            if not set(row) - hub <= members:
                raise PlanError(f"row {i}: non-hub nodes outside group {meta.group_id}")

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "method": self.method,
            "verified": self.verified,
            "rows": [list(r) for r in self.rows],
            "row_meta": [
                {"group_id": r.group_id, "is_hub_sum": r.is_hub_sum, "hub_nodes": list(r.hub_nodes)}
                for r in self.row_meta
            ],
            "groups": [
                {"members": list(g.members), "hub_sum_row": g.hub_sum_row,
                 "recovery_order": g.recovery_order, "label": g.label}
                for g in self.groups
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MeasurementPlan":
        return cls(
            n=int(d["n"]),
            k=int(d["k"]),
            method=d["method"],
            verified=d.get("verified", True),
            rows=[tuple(int(v) for v in r) for r in d["rows"]],
            row_meta=[RowMeta(int(r["group_id"]), bool(r["is_hub_sum"]),
                              tuple(int(v) for v in r["hub_nodes"]))
                      for r in d["row_meta"]],
            groups=[Group(tuple(int(v) for v in g["members"]), g["hub_sum_row"],
                          int(g["recovery_order"]), g.get("label", ""))
                    for g in d["groups"]],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MeasurementPlan":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "MeasurementPlan":
        return cls.from_json(Path(path).read_text())


def dense_to_csv(A: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(A):
        writer.writerow(int(v) for v in row)
    return buf.getvalue()


def dense_from_csv(text: str) -> np.ndarray:
    rows = [list(map(int, r)) for r in csv.reader(io.StringIO(text)) if r]
    A = np.array(rows, dtype=np.int8)
    if A.size and not np.isin(A, (0, 1)).all():
        raise PlanError("dense matrix entries must be 0 or 1")
    return A


class PlanBuilder:
    """Accumulates groups and rows, then freezes them into a plan."""

    def __init__(self, n: int, k: int, method: str):
        self.n, self.k, self.method = n, k, method
        self.rows: list[tuple[int, ...]] = []
        self.row_meta: list[RowMeta] = []
        self.groups: list[Group] = []
        self.verified: bool | None = True

    def add_group(self, members: Iterable[int], recovery_order: int = 0, label: str = "") -> int:
        self.groups.append(Group(tuple(sorted(members)), None, recovery_order, label))
        return len(self.groups) - 1

    def add_hub_sum_row(self, gid: int, hub: Iterable[int]) -> int:
        idx = len(self.rows)
        self.rows.append(tuple(sorted(set(hub))))
        self.row_meta.append(RowMeta(gid, True, ()))
        self.groups[gid] = replace(self.groups[gid], hub_sum_row=idx)
        return idx

    def add_row(self, gid: int, subset: Iterable[int], hub: Iterable[int] = ()) -> int:
        hub = tuple(sorted(set(hub)))
        self.rows.append(tuple(sorted(set(subset) | set(hub))))
        self.row_meta.append(RowMeta(gid, False, hub))
        return len(self.rows) - 1

    def note_verified(self, flag: bool | None) -> None:
        if flag is None:
            self.verified = None

    def extend(self, plan: MeasurementPlan, order_offset: int = 0) -> None:
        """Append another plan's groups and rows, renumbering references."""
        goff, roff = len(self.groups), len(self.rows)
        for g in plan.groups:
            hub_row = None if g.hub_sum_row is None else g.hub_sum_row + roff
            self.groups.append(Group(g.members, hub_row, g.recovery_order + order_offset, g.label))
        for row, meta in zip(plan.rows, plan.row_meta):
            self.rows.append(row)
            self.row_meta.append(RowMeta(meta.group_id + goff, meta.is_hub_sum, meta.hub_nodes))
        self.note_verified(plan.verified)

    def build(self, require_cover: bool = True) -> MeasurementPlan:
        plan = MeasurementPlan(self.n, self.k, self.method, list(self.rows),
                               list(self.row_meta), list(self.groups), self.verified)
        plan.validate(require_cover=require_cover)
        return plan


def concat_plans(plans: Sequence[MeasurementPlan], n: int, k: int, method: str) -> MeasurementPlan:
    b = PlanBuilder(n, k, method)
    for p in plans:
        b.extend(p)
    return b.build()
