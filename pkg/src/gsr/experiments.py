"""Experiment drivers: measurement counts of the leaf-reduction design on
random graphs, and recovery under hub errors on a scale-free graph.

Each trial draws from its own generator seeded by ``(master seed, trial)``,
so tables do not depend on worker count or completion order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .constructions import f_rows
from .graph import add_random_edges, gen_ba, gen_tree_random, is_connected
from .plan import MeasurementPlan, PlanBuilder
from .recovery import compare, recover_groupwise, recover_with_hub_errors
from .reduction import ReductionTrace, algorithm1, algorithm1_bound, reduction_trace

EXPERIMENTS = ("fig6", "fig7", "fig8")


class ExperimentError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "fig6"
    n: int = 1000
    k: int = 1
    trials: int = 30
    seed: int = 0
    c: float = 2.0
    output: str | None = None
    # fig6
    link_step: int = 25
    tree_method: str = "recursive"
    # fig7
    ns: list[int] = field(default_factory=lambda: [64, 128, 256, 512, 1024])
    ms: list[int] = field(default_factory=lambda: [1, 2, 3])
    m0: int = 10
    # fig8
    ba_m: int = 3
    graph_seed: int = 17
    ks: list[int] = field(default_factory=lambda: [1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25,
                                                   30, 35, 40])
    noise_norm: float = 2.0
    hub_error_std: float = 1.0
    solver: str = "lp"

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ExperimentError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.trials < 1:
            raise ExperimentError("trials must be >= 1")
        if self.n < 2:
            raise ExperimentError("n must be >= 2")
        if self.experiment == "fig6" and self.n < 50:
            raise ExperimentError("fig6 needs n >= 50")
        if self.link_step < 1:
            raise ExperimentError("link_step must be >= 1")
        if any(m < 1 or m > self.m0 for m in self.ms) or self.ba_m > self.m0:
            raise ExperimentError(f"BA m values must lie in 1..m0={self.m0}")
        if any(n < self.m0 for n in self.ns):
            raise ExperimentError("every n must be at least m0")
        if any(k < 1 for k in self.ks):
            raise ExperimentError("support sizes must be >= 1")
        if self.solver not in ("lp", "admm"):
            raise ExperimentError(f"unknown solver {self.solver!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ExperimentError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    def updated(self, d: dict) -> "ExperimentConfig":
        merged = asdict(self)
        merged.update(d)
        return ExperimentConfig.from_dict(merged)


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ExperimentError(f"config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ExperimentError("config file must hold a JSON object")
    return data


# ---------------------------------------------------------------------------
# result table
# ---------------------------------------------------------------------------

@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def where(self, **match) -> "ResultTable":
        idx = {k: self.columns.index(k) for k in match}
        keep = [r for r in self.rows if all(r[idx[k]] == v for k, v in match.items())]
        return ResultTable(list(self.columns), keep, dict(self.meta))

    def to_csv(self) -> str:
        # repr keeps floats exact; the meta line is a comment for gnuplot
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        lines = text.splitlines()
        meta = {}
        if lines and lines[0].startswith("#"):
            meta = json.loads(lines[0][1:])
            lines = lines[1:]
        reader = csv.reader(lines)
        columns = next(reader)
        rows = [[_parse_cell(c) for c in r] for r in reader if r]
        return cls(columns, rows, meta)

    def to_json(self) -> str:
        return json.dumps({"columns": self.columns, "rows": self.rows, "meta": self.meta},
                          indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        d = json.loads(text)
        return cls(d["columns"], d["rows"], d.get("meta", {}))

    def save(self, path, fmt: str = "csv") -> None:
        Path(path).write_text(self.to_csv() if fmt == "csv" else self.to_json())


def _parse_cell(s: str):
    try:
        return int(s)
    except ValueError:
        return float(s)


def _summary(values: Sequence[float]) -> list[float]:
    a = np.asarray(values, dtype=float)
    return [float(a.mean()), float(a.std()), float(a.min()), float(a.max())]


# ---------------------------------------------------------------------------
# trial plumbing
# ---------------------------------------------------------------------------

def trial_rng(*key: int) -> np.random.Generator:
    """Generator for one trial, keyed by ``(master seed, ...)``."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def _workers() -> int:
    try:
        cap = int(os.environ.get("GSR_THREADS", "1"))
    except ValueError:
        raise ExperimentError("GSR_THREADS must be an integer") from None
    return max(1, min(cap, os.cpu_count() or 1))


def _map(fn: Callable, args: list) -> list:
    workers = _workers()
    if workers == 1 or len(args) < 2:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args))


def trace_measurement_count(trace: ReductionTrace, k: int = 1, c: float = 2.0) -> int:
    """Rows of the leaf-reduction design: ``sum_i f(k, n_i)`` over the hub
    groups plus one row per group (hub sums and the final direct row)."""
    sizes = trace.group_sizes
    return sum(f_rows(s, k, c) for s in sizes[:-1]) + len(sizes)


# ---------------------------------------------------------------------------
# fig6: random tree plus links
# ---------------------------------------------------------------------------

def _fig6_trial(args) -> list[tuple[int, int, int]]:
    cfg, t = args
    rng = trial_rng(cfg.seed, t)
    g = gen_tree_random(cfg.n, rng, method=cfg.tree_method)
    out = []
    while True:
        trace = reduction_trace(g)
        out.append((g.num_edges, trace_measurement_count(trace, cfg.k, cfg.c), trace.initial_radius))
        if g.num_edges >= 2 * cfg.n - 1:
            break
        step = min(cfg.link_step, 2 * cfg.n - 1 - g.num_edges)
        g = add_random_edges(g, step, rng)
    return out


def run_fig6(cfg: ExperimentConfig) -> ResultTable:
    """Measurement count and radius while links are added to a random tree.

    Starts from ``n - 1`` links and adds ``link_step`` fresh links per point
    until ``2n - 1``.
    """
    cfg.validate()
    per_trial = _map(_fig6_trial, [(cfg, t) for t in range(cfg.trials)])
    cols = ["links", "mean_measurements", "std_measurements", "min_measurements",
            "max_measurements", "mean_radius", "mean_upper_bound"]
    table = ResultTable(cols, meta={"experiment": "fig6", "n": cfg.n, "k": cfg.k,
                                    "trials": cfg.trials, "seed": cfg.seed,
                                    "tree_method": cfg.tree_method})
    for i in range(len(per_trial[0])):
        links = per_trial[0][i][0]
        counts = [tr[i][1] for tr in per_trial]
        radii = [tr[i][2] for tr in per_trial]
        bounds = [algorithm1_bound(r, cfg.n, cfg.k, cfg.c) for r in radii]
        table.rows.append([links, *_summary(counts), float(np.mean(radii)), float(np.mean(bounds))])
    return table


# ---------------------------------------------------------------------------
# fig7: Barabasi-Albert graphs of growing size
# ---------------------------------------------------------------------------

def _fig7_trial(args) -> tuple[int, int]:
    cfg, n, m, t = args
    g = gen_ba(n, cfg.m0, m, trial_rng(cfg.seed, n, m, t))
    trace = reduction_trace(g)
    return trace_measurement_count(trace, cfg.k, cfg.c), trace.initial_radius


def run_fig7(cfg: ExperimentConfig) -> ResultTable:
    """Measurement count on BA graphs for every ``(n, m)`` pair."""
    cfg.validate()
    cols = ["n", "m", "mean_measurements", "std_measurements", "min_measurements",
            "max_measurements", "mean_radius"]
    table = ResultTable(cols, meta={"experiment": "fig7", "m0": cfg.m0, "k": cfg.k,
                                    "trials": cfg.trials, "seed": cfg.seed})
    jobs = [(cfg, n, m, t) for n in cfg.ns for m in cfg.ms for t in range(cfg.trials)]
    results = _map(_fig7_trial, jobs)
    pos = 0
    for n in cfg.ns:
        for m in cfg.ms:
            chunk = results[pos:pos + cfg.trials]
            pos += cfg.trials
            table.rows.append([n, m, *_summary([c for c, _ in chunk]),
                               float(np.mean([r for _, r in chunk]))])
    return table


def log_fit_r2(ns: Sequence[float], values: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line of ``values`` against ``log2(n)``: ``(slope, intercept, R^2)``."""
    x = np.log2(np.asarray(ns, dtype=float))
    y = np.asarray(values, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


# ---------------------------------------------------------------------------
# fig8: recovery with hub errors
# ---------------------------------------------------------------------------

def fig8_plan(g, trace: ReductionTrace, rng: np.random.Generator, k: int = 1) -> MeasurementPlan:
    """Leaf-reduction groups with ``ceil(n_i/2)`` random rows per large group.

    Every group with more than three nodes gets a hub-sum row plus random
    rows, each a fair-coin subset of the group joined with its hub. Smaller
    groups are measured node by node.
    """
    b = PlanBuilder(g.n, k, "fig8")
    for it in trace.iterations:
        S = it.leaves
        gid = b.add_group(S, recovery_order=it.index, label=f"round{it.index}")
        if len(S) > 3:
            hub = it.expanded_hub
            b.add_hub_sum_row(gid, hub)
            for _ in range(math.ceil(len(S) / 2)):
                W = [v for v in S if rng.random() < 0.5]
                b.add_row(gid, W, hub)
        else:
            for v in S:
                b.add_row(gid, [v])
    gid = b.add_group([trace.final_node], recovery_order=len(trace.iterations), label="last")
    b.add_row(gid, [trace.final_node])
    plan = b.build()
    for i, row in enumerate(plan.rows):
        if not is_connected(g, row):
            raise ExperimentError(f"fig8 row {i} is infeasible")
    return plan


def fig8_instance(cfg: ExperimentConfig):
    """The BA graph, its reduction trace and the measurement plan."""
    g = gen_ba(cfg.n, cfg.m0, cfg.ba_m, cfg.graph_seed)
    _, trace = algorithm1(g, 1, check=False)
    sizes = trace.group_sizes
    if len(sizes) != 4 or min(sizes[:2]) <= 3 or max(sizes[2:]) > 3:
        raise ExperimentError(f"expected four groups (two large, two tiny), got sizes {sizes}")
    plan = fig8_plan(g, trace, trial_rng(cfg.seed, 8), k=max(cfg.ks))
    return g, trace, plan


def _fig8_trial(args) -> list[float]:
    cfg, plan, k, t = args
    rng = trial_rng(cfg.seed, k, t)
    n = plan.n
    x0 = np.zeros(n)
    supp = rng.choice(n, size=k, replace=False)
    x0[supp] = rng.standard_normal(k)
    x0 /= np.linalg.norm(x0)
    hub_rows = [g.hub_sum_row for g in plan.groups if g.hub_sum_row is not None]
    err = np.zeros(plan.m)
    err[hub_rows] = cfg.hub_error_std * rng.standard_normal(len(hub_rows))
    w = rng.standard_normal(plan.m)
    w[hub_rows] = 0.0
    w *= cfg.noise_norm / np.linalg.norm(w)
    y = plan.apply(x0) + err
    out = []
    for data in (y, y + w):
        ours = recover_with_hub_errors(plan, data, method=cfg.solver)
        plain = recover_groupwise(plan, data, method=cfg.solver, sparse_fallback=False)
        out.append(compare(ours.x_recovered, x0)["l2_error"])
        out.append(compare(plain.x_recovered, x0)["l2_error"])
    return out


def run_fig8(cfg: ExperimentConfig) -> ResultTable:
    """Recovery error with unit-variance hub errors, with and without extra
    measurement noise, for the augmented and the plain group-wise decoder."""
    cfg.validate()
    g, trace, plan = fig8_instance(cfg)
    cols = ["k", "ours_no_noise", "l1_no_noise", "ours_noise", "l1_noise"]
    table = ResultTable(cols, meta={"experiment": "fig8", "n": cfg.n, "rows": plan.m,
                                    "group_sizes": trace.group_sizes, "trials": cfg.trials,
                                    "seed": cfg.seed, "graph_seed": cfg.graph_seed,
                                    "ba_m": cfg.ba_m, "m0": cfg.m0})
    for k in cfg.ks:
        errs = np.array(_map(_fig8_trial, [(cfg, plan, k, t) for t in range(cfg.trials)]))
        ours, plain, ours_w, plain_w = errs.mean(axis=0).tolist()
        table.rows.append([k, ours, plain, ours_w, plain_w])
    return table


RUNNERS = {"fig6": run_fig6, "fig7": run_fig7, "fig8": run_fig8}


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    cfg.validate()
    return RUNNERS[cfg.experiment](cfg)
