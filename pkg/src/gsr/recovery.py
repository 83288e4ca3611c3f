"""Recovering sparse node vectors from plan measurements.

Groups are decoded one at a time in ``recovery_order``. A group's rows are
first reduced to sums over their in-group part by removing the hub, then the
group subvector is found by l1 minimization (basis pursuit).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .plan import MeasurementPlan

SUPPORT_THRESHOLD = 1e-8
DEFAULT_TOL = 1e-9
MAX_ITER = 100_000
# exhaustive k-sparse fallback is attempted only below this many supports
FALLBACK_BUDGET = 20_000


class RecoveryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# vectors
# ---------------------------------------------------------------------------

@dataclass
class SparseVector:
    n: int
    entries: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for i, v in self.entries.items():
            if not 0 <= i < self.n:
                raise RecoveryError(f"index {i} outside 0..{self.n - 1}")
            if not math.isfinite(v):
                raise RecoveryError(f"entry {i} is not finite")
        self.entries = {int(i): float(v) for i, v in sorted(self.entries.items()) if v != 0}

    @classmethod
    def from_dense(cls, x, threshold: float = 0.0) -> "SparseVector":
        x = np.asarray(x, dtype=float)
        return cls(len(x), {i: float(x[i]) for i in np.flatnonzero(np.abs(x) > threshold)})

    def to_dense(self) -> np.ndarray:
        x = np.zeros(self.n)
        for i, v in self.entries.items():
            x[i] = v
        return x

    @property
    def support(self) -> list[int]:
        return list(self.entries)

    @property
    def norm0(self) -> int:
        return len(self.entries)


def _dense(x) -> np.ndarray:
    return x.to_dense() if isinstance(x, SparseVector) else np.asarray(x, dtype=float)


def dumps_sparse(x: SparseVector) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value"])
    w.writerow(["n", x.n])
    for i, v in x.entries.items():
        w.writerow([i, repr(v)])
    return buf.getvalue()


def loads_sparse(text: str) -> SparseVector:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or rows[0] != ["index", "value"]:
        raise RecoveryError("sparse vector CSV must start with an 'index,value' header")
    body = rows[1:]
    if not body or body[0][0] != "n":
        raise RecoveryError("sparse vector CSV needs an 'n,<dimension>' line")
    return SparseVector(int(body[0][1]), {int(i): float(v) for i, v in body[1:]})


def dumps_dense(x) -> str:
    return "".join(repr(float(v)) + "\n" for v in _dense(x))


def loads_dense(text: str) -> np.ndarray:
    return np.array([float(line) for line in text.split()], dtype=float)


def load_vector(path) -> np.ndarray:
    """Read either vector CSV flavor as a dense array."""
    text = Path(path).read_text()
    if text.lstrip().startswith("index"):
        return loads_sparse(text).to_dense()
    return loads_dense(text)


# ---------------------------------------------------------------------------
# basis pursuit
# ---------------------------------------------------------------------------

@dataclass
class BPSolution:
    x: np.ndarray
    converged: bool
    iterations: int
    residual: float
    method: str
    # y was outside range(A) and got replaced by its least-squares projection
    projected: bool = False
    message: str = ""


def _project(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return A @ coef


def _polish(A, y, x, threshold=SUPPORT_THRESHOLD) -> np.ndarray:
    """Re-solve on the support of ``x`` by least squares if that shrinks the residual."""
    supp = np.flatnonzero(np.abs(x) > threshold)
    if supp.size == 0 or supp.size > A.shape[0]:
        return x
    coef, *_ = np.linalg.lstsq(A[:, supp], y, rcond=None)
    z = np.zeros_like(x)
    z[supp] = coef
    if np.linalg.norm(A @ z - y) <= np.linalg.norm(A @ x - y):
        return z
    return x


def _bp_lp(A, y, tol, max_iter):
    m, n = A.shape
    # x = u - v with u, v >= 0; minimize sum(u + v)
    res = linprog(np.ones(2 * n), A_eq=np.hstack([A, -A]), b_eq=y, bounds=(0, None),
                  method="highs-ds",
                  options={"presolve": False, "maxiter": max_iter,
                           "primal_feasibility_tolerance": max(tol, 1e-10),
                           "dual_feasibility_tolerance": max(tol, 1e-10)})
    if res.x is None:
        return None, False, int(res.nit or 0), res.message
    x = res.x[:n] - res.x[n:]
    return x, res.status == 0, int(res.nit), res.message


def _bp_admm(A, y, tol, max_iter, rho=1.0):
    # splitting x = z with x constrained to {Ax = y} and z carrying the l1 term
    m, n = A.shape
    pinv = np.linalg.pinv(A)
    P = np.eye(n) - pinv @ A
    x0 = pinv @ y
    z = np.zeros(n)
    u = np.zeros(n)
    thresh = 1.0 / rho
    for it in range(1, max_iter + 1):
        x = P @ (z - u) + x0
        z_old = z
        v = x + u
        z = np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)
        u = u + x - z
        r_pri = np.linalg.norm(x - z)
        r_dual = rho * np.linalg.norm(z - z_old)
        if r_pri <= tol * math.sqrt(n) and r_dual <= tol * math.sqrt(n):
            return x, True, it, "primal and dual residuals below tolerance"
    return x, False, max_iter, "iteration cap reached"


def solve_basis_pursuit(A, y, tol: float = DEFAULT_TOL, method: str = "lp",
                        max_iter: int = MAX_ITER) -> BPSolution:
    """Minimize ``||x||_1`` subject to ``A x = y``.

    ``method="lp"`` solves the equivalent linear program with the HiGHS dual
    simplex; ``method="admm"`` runs alternating-direction splitting and stops
    once both primal and dual residuals fall below ``tol * sqrt(n)`` or after
    ``max_iter`` iterations. The result is polished by least squares on its
    support. A ``y`` outside the range of ``A`` is projected onto it first and
    the solution is flagged. Non-convergence is reported, not raised.
    """
    if tol <= 0:
        raise RecoveryError("tol must be positive")
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2 or y.shape != (A.shape[0],):
        raise RecoveryError(f"shape mismatch: A is {A.shape}, y is {y.shape}")
    m, n = A.shape
    if m == 0 or not np.any(y):
        return BPSolution(np.zeros(n), True, 0, float(np.linalg.norm(y)), method,
                          message="zero measurements")
    scale = max(1.0, float(np.linalg.norm(y)))
    projected = False
    target = y
    if np.linalg.norm(_project(A, y) - y) > tol * scale:
        target = _project(A, y)
        projected = True
    if method == "lp":
        x, ok, nit, msg = _bp_lp(A, target, tol, max_iter)
        if x is None and not projected:
            target = _project(A, y)
            projected = True
            x, ok, nit, msg = _bp_lp(A, target, tol, max_iter)
        if x is None:
            return BPSolution(np.zeros(n), False, nit, float(np.linalg.norm(y)), method,
                              projected, str(msg))
    elif method == "admm":
        x, ok, nit, msg = _bp_admm(A, target, tol, max_iter)
    else:
        raise RecoveryError(f"unknown solver {method!r}")
    x = _polish(A, target, x)
    resid = float(np.linalg.norm(A @ x - target))
    ok = ok and resid <= max(tol, 1e-7) * scale
    return BPSolution(x, ok, nit, resid, method, projected, str(msg))


def _sparse_search(A, y, k: int, tol: float) -> np.ndarray | None:
    """Exact search for a consistent vector with at most ``k`` nonzeros."""
    m, n = A.shape
    scale = max(1.0, float(np.linalg.norm(y)))
    for size in range(1, min(k, n) + 1):
        for supp in itertools.combinations(range(n), size):
            cols = A[:, supp]
            coef, *_ = np.linalg.lstsq(cols, y, rcond=None)
            if np.linalg.norm(cols @ coef - y) <= tol * scale:
                x = np.zeros(n)
                x[list(supp)] = coef
                return x
    return None


# ---------------------------------------------------------------------------
# group-wise recovery
# ---------------------------------------------------------------------------

@dataclass
class RecoveryResult:
    x_recovered: SparseVector
    hub_error_estimates: dict[int, float]
    residual_l2: float
    per_group_status: list[dict]

    @property
    def ok(self) -> bool:
        return all(s["converged"] for s in self.per_group_status)

    def to_dict(self) -> dict:
        return {
            "n": self.x_recovered.n,
            "x": {str(i): v for i, v in self.x_recovered.entries.items()},
            "hub_error_estimates": {str(r): e for r, e in self.hub_error_estimates.items()},
            "residual_l2": self.residual_l2,
            "groups": self.per_group_status,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def _group_system(plan: MeasurementPlan, gid: int, y: np.ndarray, x: np.ndarray,
                  known: np.ndarray):
    grp = plan.groups[gid]
    members = list(grp.members)
    col = {v: j for j, v in enumerate(members)}
    rows = plan.group_rows(gid)
    hub_row = grp.hub_sum_row
    hub_set = set(plan.rows[hub_row]) if hub_row is not None else None
    A = np.zeros((len(rows), len(members)))
    b = np.empty(len(rows))
    for i, r in enumerate(rows):
        meta = plan.row_meta[r]
        hub = meta.hub_nodes
        val = y[r]
        if hub:
            if hub_set is not None and set(hub) == hub_set:
                val -= y[hub_row]
            else:
                missing = [v for v in hub if not known[v]]
                if missing:
                    raise RecoveryError(f"group {gid} row {r} needs hub nodes {missing[:5]} "
                                        "that no earlier group recovers")
                val -= x[list(hub)].sum()
        hub_part = set(hub)
        for v in plan.rows[r]:
            if v not in hub_part:
                A[i, col[v]] = 1.0
        b[i] = val
    return members, rows, A, b


def _recover(plan: MeasurementPlan, y, tol: float, method: str, hub_errors: bool,
             sparse_fallback: bool) -> RecoveryResult:
    y = np.asarray(y, dtype=float)
    if y.shape != (plan.m,):
        raise RecoveryError(f"expected {plan.m} measurements, got shape {y.shape}")
    x = np.zeros(plan.n)
    known = np.zeros(plan.n, dtype=bool)
    errors: dict[int, float] = {}
    status = []
    order = sorted(range(len(plan.groups)), key=lambda g: (plan.groups[g].recovery_order, g))
    for gid in order:
        grp = plan.groups[gid]
        members, rows, A, b = _group_system(plan, gid, y, x, known)
        augmented = hub_errors and grp.hub_sum_row is not None and len(rows) > 0
        if augmented:
            # y_row - y_hub = sum_W x - e, where e is the hub-sum row's error
            A = np.hstack([A, -np.ones((len(rows), 1))])
        sol = solve_basis_pursuit(A, b, tol, method) if rows else \
            BPSolution(np.zeros(len(members)), True, 0, 0.0, method, message="no rows")
        z = sol.x
        fallback = False
        nnz = int(np.sum(np.abs(z[:len(members)]) > SUPPORT_THRESHOLD))
        if (sparse_fallback and not augmented and rows and nnz > plan.k
                and sum(math.comb(len(members), s) for s in range(1, plan.k + 1)) <= FALLBACK_BUDGET):
            alt = _sparse_search(A, b, plan.k, max(tol, 1e-9))
            if alt is not None:
                z = alt
                fallback = True
        x[members] = z[:len(members)]
        known[members] = True
        if augmented:
            errors[grp.hub_sum_row] = float(z[-1])
        status.append({"group": gid, "label": grp.label, "rows": len(rows),
                       "columns": len(members), "converged": bool(sol.converged or fallback),
                       "projected": sol.projected, "iterations": sol.iterations,
                       "residual": sol.residual, "sparse_fallback": fallback,
                       "message": sol.message})
    y_adj = y.copy()
    for r, e in errors.items():
        y_adj[r] -= e
    residual = float(np.linalg.norm(plan.apply(x) - y_adj))
    x_out = SparseVector.from_dense(x, SUPPORT_THRESHOLD)
    return RecoveryResult(x_out, errors, residual, status)


def recover_groupwise(plan: MeasurementPlan, y, tol: float = DEFAULT_TOL, method: str = "lp",
                      sparse_fallback: bool = True) -> RecoveryResult:
    """Decode every group after removing its hub contribution.

    Rows sharing the group's hub-sum row subtract that measurement; rows whose
    hub was recovered by an earlier group subtract the recovered values. Each
    group subvector then comes from basis pursuit. With ``sparse_fallback``,
    a group solution with more than ``plan.k`` nonzeros is replaced by the
    consistent ``k``-sparse vector when a small exhaustive search finds one.
    """
    return _recover(plan, y, tol, method, False, sparse_fallback)


def recover_with_hub_errors(plan: MeasurementPlan, y, tol: float = DEFAULT_TOL,
                            method: str = "lp") -> RecoveryResult:
    """Like :func:`recover_groupwise`, but every hub-sum row gets an unknown
    additive error that is estimated jointly with its group."""
    if not any(g.hub_sum_row is not None for g in plan.groups):
        raise RecoveryError("plan has no hub-sum rows")
    return _recover(plan, y, tol, method, True, False)


# ---------------------------------------------------------------------------
# direct decoding and comparison
# ---------------------------------------------------------------------------

def decode_1sparse_binary(plan: MeasurementPlan, y, tol: float = 1e-9) -> SparseVector:
    """Read a 1-sparse vector off the binary-expansion design.

    Row ``b`` holds the nodes whose (index + 1) has bit ``b`` set, so the
    nonzero measurements spell the index and all carry the same value.
    """
    y = np.asarray(y, dtype=float)
    if plan.k != 1 or plan.method != "complete":
        raise RecoveryError("plan is not the k = 1 complete-graph design")
    if y.shape != (plan.m,):
        raise RecoveryError(f"expected {plan.m} measurements, got shape {y.shape}")
    nz = np.flatnonzero(np.abs(y) > tol)
    if nz.size == 0:
        return SparseVector(plan.n)
    value = y[nz[0]]
    if np.any(np.abs(y[nz] - value) > tol * max(1.0, abs(value))):
        raise RecoveryError("nonzero measurements differ; no 1-sparse vector fits")
    code = sum(1 << int(b) for b in nz)
    idx = code - 1
    if idx >= plan.n:
        raise RecoveryError(f"decoded index {idx} is outside the plan")
    return SparseVector(plan.n, {idx: float(value)})


def compare(x_recovered, x_truth, threshold: float = SUPPORT_THRESHOLD) -> dict:
    """``l2_error`` and whether both supports agree at ``threshold``."""
    a, b = _dense(x_recovered), _dense(x_truth)
    if a.shape != b.shape:
        raise RecoveryError(f"dimension mismatch: {a.shape} vs {b.shape}")
    same = np.array_equal(np.abs(a) > threshold, np.abs(b) > threshold)
    return {"l2_error": float(np.linalg.norm(a - b)), "support_match": bool(same)}
