"""Ground-truth oracles: row feasibility, exact k-sparse identifiability,
exhaustive minimum measurement counts for tiny graphs, endpoint counting."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import exact
from .graph import Graph, is_connected
from .plan import Group, MeasurementPlan, RowMeta

DEFAULT_SUBSET_BUDGET = 60_000
_CHUNK = 4096


class VerificationError(ValueError):
    pass


@dataclass
class FeasibilityReport:
    ok: bool
    offending_row: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_feasibility(g: Graph, plan: MeasurementPlan) -> FeasibilityReport:
    """Every row must be nonempty and induce a connected subgraph of ``g``."""
    if plan.n != g.n:
        raise VerificationError(f"plan has {plan.n} columns but graph has {g.n} nodes")
    for i, row in enumerate(plan.rows):
        if not row or not is_connected(g, row):
            return FeasibilityReport(False, i)
    return FeasibilityReport(True)


@dataclass
class IdentifiabilityReport:
    """Outcome of the every-2k-columns-independent test.

    ``verdict`` is ``True`` (pass), ``False`` (fail, with witness) or ``None``
    when the instance exceeds the subset budget.
    """

    verdict: bool | None
    k: int
    subsets_checked: int = 0
    witness_columns: tuple[int, ...] | None = None
    kernel: list[Fraction] | None = None
    message: str = ""

    @property
    def status(self) -> str:
        return {True: "pass", False: "fail", None: "unverifiable"}[self.verdict]

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "k": self.k,
            "subsets_checked": self.subsets_checked,
            "witness_columns": None if self.witness_columns is None else list(self.witness_columns),
            "kernel": None if self.kernel is None else [str(v) for v in self.kernel],
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def _as_matrix(plan_or_matrix) -> np.ndarray:
    if isinstance(plan_or_matrix, MeasurementPlan):
        return plan_or_matrix.dense().astype(np.int64)
    return np.asarray(plan_or_matrix, dtype=np.int64)


def _witness(A: np.ndarray, cols: Sequence[int]) -> list[Fraction]:
    sub = A[:, list(cols)].tolist()
    basis = exact.nullspace(sub, ncols=len(cols))
    vec = exact.primitive_integer_vector(basis[0])
    full = [Fraction(0)] * A.shape[1]
    for c, v in zip(cols, vec):
        full[c] = Fraction(v)
    return full


def check_identifiability(plan_or_matrix, k: int,
                          budget: int = DEFAULT_SUBSET_BUDGET) -> IdentifiabilityReport:
    """Exact test that every ``2k`` columns are linearly independent.

    Column subsets are scanned in lexicographic order, so a failing report's
    witness is the lexicographically smallest dependent subset. Its kernel
    vector ``z`` satisfies ``A z = 0`` exactly.
    """
    if k < 1:
        raise VerificationError("k must be >= 1")
    A = _as_matrix(plan_or_matrix)
    m, n = A.shape
    size = min(2 * k, n)
    total = math.comb(n, size)
    if total > budget:
        return IdentifiabilityReport(None, k, 0, message=f"C({n},{size}) = {total} subsets exceed budget {budget}")
    checked = 0
    combos = itertools.combinations(range(n), size)
    while True:
        chunk = list(itertools.islice(combos, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.intp).reshape(len(chunk), size)
        mats = np.transpose(A[:, idx], (1, 0, 2))
        ok = exact.full_column_rank_batch(mats)
        if not ok.all():
            first = int(np.argmin(ok))
            cols = chunk[first]
            return IdentifiabilityReport(False, k, checked + first + 1, tuple(cols), _witness(A, cols),
                                         message=f"columns {list(cols)} are dependent")
        checked += len(chunk)
    return IdentifiabilityReport(True, k, checked)


def kernel_search_identifiable(A, k: int) -> bool:
    """Independent oracle: no nonzero kernel vector has at most ``2k`` nonzeros.

    Takes a kernel basis ``N`` of the whole matrix (sympy) and asks, for each
    support set ``T``, whether some combination of the basis vanishes off
    ``T``, i.e. whether the rows of ``N`` outside ``T`` are rank deficient.
    """
    import sympy

    A = np.asarray(A, dtype=np.int64)
    m, n = A.shape
    basis = sympy.Matrix(A.tolist()).nullspace() if m else [sympy.eye(n)[:, j] for j in range(n)]
    d = len(basis)
    if d == 0:
        return True
    if n <= 2 * k:
        return False
    N = [[Fraction(int(b[i].p), int(b[i].q)) for b in basis] for i in range(n)]
    for support in itertools.combinations(range(n), 2 * k):
        inside = set(support)
        outside = [N[i] for i in range(n) if i not in inside]
        if exact.rank(outside) < d:
            return False
    return True


def distinct_nonzero_columns(A) -> bool:
    """The k = 1 criterion for 0-1 matrices."""
    A = np.asarray(A)
    cols = [tuple(c) for c in A.T.tolist()]
    return all(any(c) for c in cols) and len(set(cols)) == len(cols)


def connected_subsets(g: Graph) -> list[int]:
    """Bitmasks of all node sets inducing a connected subgraph."""
    nbr = [sum(1 << w for w in g.neighbors(v)) for v in range(g.n)]
    out = []
    for mask in range(1, 1 << g.n):
        low = mask & -mask
        seen = low
        frontier = low
        while frontier:
            grow = 0
            f = frontier
            while f:
                b = f & -f
                grow |= nbr[b.bit_length() - 1]
                f ^= b
            frontier = grow & mask & ~seen
            seen |= frontier
        if seen == mask:
            out.append(mask)
    return out


def _search(rows: list[int], n: int, m: int) -> list[int] | None:
    """Find ``m`` row masks giving pairwise distinct nonzero column codes."""
    chosen: list[int] = []

    def feasible(codes: list[int], remaining: int) -> bool:
        cap = 1 << remaining
        counts: dict[int, int] = {}
        for c in codes:
            counts[c] = counts.get(c, 0) + 1
        for c, cnt in counts.items():
            if cnt > (cap - 1 if c == 0 else cap):
                return False
        return True

    def rec(start: int, codes: list[int]) -> bool:
        remaining = m - len(chosen)
        if not feasible(codes, remaining):
            return False
        if remaining == 0:
            return True
        bit = 1 << len(chosen)
        for i in range(start, len(rows) - remaining + 1):
            r = rows[i]
            chosen.append(r)
            new = [c | bit if (r >> v) & 1 else c for v, c in enumerate(codes)]
            if rec(i + 1, new):
                return True
            chosen.pop()
        return False

    return list(chosen) if rec(0, [0] * n) else None


def min_measurements_exhaustive(g: Graph, k: int = 1, max_m: int | None = None,
                                max_n: int = 8) -> tuple[int, MeasurementPlan]:
    """Smallest number of feasible rows identifying all 1-sparse vectors on ``g``.

    Exhaustive over all connected node subsets, so only tiny graphs qualify.
    """
    if k != 1:
        raise VerificationError("exhaustive search implements the k = 1 criterion only")
    if g.n > max_n:
        raise VerificationError(f"n = {g.n} exceeds the exhaustive limit {max_n}")
    rows = connected_subsets(g)
    limit = g.n if max_m is None else max_m
    for m in range(1, limit + 1):
        found = _search(rows, g.n, m)
        if found is not None:
            supports = [tuple(v for v in range(g.n) if (r >> v) & 1) for r in found]
            plan = MeasurementPlan(g.n, 1, "exhaustive", supports,
                                   [RowMeta(0) for _ in supports],
                                   [Group(tuple(range(g.n)), None, 0, "all")])
            return m, plan
    raise VerificationError(f"no identifying design with at most {limit} rows")


def count_endpoints(plan: MeasurementPlan) -> list[int]:
    """How often each node starts or ends an interval row (a singleton counts twice)."""
    counts = [0] * plan.n
    for i, row in enumerate(plan.rows):
        if row[-1] - row[0] + 1 != len(row):
            raise VerificationError(f"row {i} is not an interval")
        counts[row[0]] += 1
        counts[row[-1]] += 1
    return counts
