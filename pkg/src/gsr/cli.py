"""Command-line front end: ``gsr graph|construct|verify|recover|experiment``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import graph as gr
from .constructions import (ConstructionError, FParams, construct_complete, construct_g4,
                            construct_g4_minus, construct_grid, construct_line_1,
                            construct_line_k, construct_tree, sample_markov_rows)
from .experiments import ExperimentConfig, ExperimentError, load_config, run_experiment
from .partition import (PartitionError, construct_from_partition, er_random_2partition,
                        load_partition)
from .plan import MeasurementPlan, PlanError, dense_to_csv
from .recovery import (RecoveryError, dumps_sparse, load_vector, recover_groupwise,
                       recover_with_hub_errors)
from .reduction import ReductionError, algorithm1, spanning_tree_baseline
from .verification import VerificationError, check_feasibility, check_identifiability

log = logging.getLogger("gsr")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARAMS = 4
EXIT_SOLVER = 5

GRAPH_TYPES = ("line", "ring", "complete", "star", "g4", "g4_minus", "grid", "tree", "er", "ba")
METHODS = ("complete", "line_k", "line_1", "g4", "g4_minus", "grid", "tree", "partition",
           "algorithm1", "spanning_tree", "markov")


class SolverFailure(RuntimeError):
    pass


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()] if text else []


def _side(n: int) -> int:
    side = math.isqrt(n)
    if side * side != n:
        raise gr.GraphError(f"grid needs a square node count, got {n}")
    return side


def make_graph(kind: str, n: int, seed: int, p: float | None = None, m0: int = 10, m: int = 1,
               deleted: list[int] | None = None, tree_method: str = "prufer",
               extra_links: int = 0) -> gr.Graph:
    if kind == "line":
        g = gr.gen_line(n)
    elif kind == "ring":
        g = gr.gen_ring(n)
    elif kind == "complete":
        g = gr.gen_complete(n)
    elif kind == "star":
        g = gr.gen_star(n - 1)
    elif kind == "g4":
        g = gr.gen_g4(n)
    elif kind == "g4_minus":
        g = gr.gen_g4_minus(n, deleted or [])
    elif kind == "grid":
        g = gr.gen_grid(_side(n))
    elif kind == "tree":
        g = gr.gen_tree_random(n, seed, method=tree_method)
    elif kind == "er":
        g = gr.gen_er(n, p if p is not None else 2.5 * math.log(n) / n, seed)
    elif kind == "ba":
        g = gr.gen_ba(n, m0, m, seed)
    else:
        raise gr.GraphError(f"unknown graph type {kind!r}")
    if extra_links:
        g = gr.add_random_edges(g, extra_links, seed + 1)
    return g


def _graph_from_args(args) -> gr.Graph:
    src = args.graph
    if src in GRAPH_TYPES:
        if args.n is None:
            raise gr.GraphError(f"--n is required to generate a {src} graph")
        return make_graph(src, args.n, args.seed, args.p, args.m0, args.m, _ints(args.deleted),
                          args.tree_method, args.extra_links)
    return gr.load_graph(src)


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_graph(args) -> int:
    g = make_graph(args.type, args.n, args.seed, args.p, args.m0, args.m, _ints(args.deleted),
                   args.tree_method, args.extra_links)
    _write(gr.dumps_graph(g), args.out)
    if args.out not in (None, "-"):
        radius, center = gr.radius_and_center(g) if gr.is_connected(g, range(g.n)) else (None, None)
        print(f"nodes: {g.n}  links: {g.num_edges}  radius: {radius}  center: {center}")
    return EXIT_OK


def build_plan(args, g: gr.Graph | None) -> tuple[MeasurementPlan, object]:
    f = FParams(c=args.c, seed=args.seed)
    n = g.n if g is not None else args.n
    k, method = args.k, args.method
    trace = None
    if method == "complete":
        plan = construct_complete(n, k, f=f)
    elif method == "line_k":
        plan = construct_line_k(n, k)
    elif method == "line_1":
        plan = construct_line_1(n)
    elif method == "g4":
        plan = construct_g4(n, k, f)
    elif method == "g4_minus":
        plan = construct_g4_minus(n, _ints(args.deleted), k, f)
    elif method == "grid":
        plan = construct_grid(_side(n), k, f)
    elif method == "markov":
        rows = args.rows or math.ceil(4 * math.log2(n))
        plan = sample_markov_rows(n, rows, args.seed)
    else:
        if g is None:
            raise ConstructionError(f"method {method} needs --graph")
        if method == "tree":
            _, center = gr.radius_and_center(g)
            plan = construct_tree(g, center, k, f)
        elif method == "partition":
            groups = load_partition(args.partition) if args.partition else \
                er_random_2partition(g, args.seed).groups
            plan = construct_from_partition(g, groups, k, f)
        elif method == "algorithm1":
            plan, trace = algorithm1(g, k, f)
        elif method == "spanning_tree":
            plan = spanning_tree_baseline(g, k, f)
        else:
            raise ConstructionError(f"unknown method {method!r}")
    return plan, trace


def cmd_construct(args) -> int:
    g = _graph_from_args(args) if args.graph else None
    plan, trace = build_plan(args, g)
    if g is not None:
        rep = check_feasibility(g, plan)
        if not rep:
            print(f"row {rep.offending_row} is infeasible on the graph", file=sys.stderr)
            return EXIT_VERIFY_FAILED
    if args.format == "csv":
        _write(dense_to_csv(plan.dense()), args.out)
    else:
        _write(plan.to_json(), args.out)
    if trace is not None and args.trace:
        Path(args.trace).write_text(trace.to_jsonl())
    if args.out not in (None, "-"):
        print(f"rows: {plan.m}")
    return EXIT_OK


def cmd_verify(args) -> int:
    plan = MeasurementPlan.load(args.plan)
    out: dict = {"rows": plan.m}
    code = EXIT_OK
    if args.graph:
        g = gr.load_graph(args.graph)
        rep = check_feasibility(g, plan)
        out["feasible"] = rep.ok
        out["offending_row"] = rep.offending_row
        if not rep:
            code = EXIT_VERIFY_FAILED
    k = args.k if args.k is not None else plan.k
    ident = check_identifiability(plan, k, budget=args.budget)
    out["identifiability"] = ident.to_dict()
    if ident.verdict is False:
        code = EXIT_VERIFY_FAILED
    if args.format == "json" or args.out not in (None, "-"):
        _write(json.dumps(out, indent=1) + "\n", args.out)
    if args.out not in (None, "-") or args.format != "json":
        feas = out.get("feasible")
        print(f"feasible: {'n/a' if feas is None else feas}  identifiability (k={k}): {ident.status}"
              + (f"  [{ident.message}]" if ident.message else ""))
    return code


def cmd_recover(args) -> int:
    plan = MeasurementPlan.load(args.plan)
    y = load_vector(args.y)
    if args.hub_errors:
        res = recover_with_hub_errors(plan, y, tol=args.tol, method=args.solver)
    else:
        res = recover_groupwise(plan, y, tol=args.tol, method=args.solver)
    if args.format == "csv":
        _write(dumps_sparse(res.x_recovered), args.out)
    else:
        _write(res.to_json(), args.out)
    if not res.ok:
        bad = [s["group"] for s in res.per_group_status if not s["converged"]]
        raise SolverFailure(f"solver did not converge for groups {bad}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig(experiment=args.name, seed=args.seed)
    flags = {k: v for k, v in (("n", args.n), ("k", args.k), ("trials", args.trials),
                               ("solver", args.solver)) if v is not None}
    if args.ns:
        flags["ns"] = _ints(args.ns)
    if args.ks:
        flags["ks"] = _ints(args.ks)
    if args.ms:
        flags["ms"] = _ints(args.ms)
    if args.name == "fig8" and "n" not in flags:
        flags["n"] = 500
    cfg = cfg.updated(flags)
    if args.config:
        # config file entries take precedence over flags
        cfg = cfg.updated(load_config(args.config))
    log.info("running %s: %s", cfg.experiment, cfg)
    table = run_experiment(cfg)
    out = args.out or cfg.output
    text = table.to_csv() if args.format == "csv" else table.to_json()
    _write(text, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _graph_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=float, help="ER link probability (default 2.5 ln n / n)")
    p.add_argument("--m0", type=int, default=10, help="BA seed tree size")
    p.add_argument("--m", type=int, default=1, help="BA links per new node")
    p.add_argument("--deleted", default="", help="G4 chord midpoints to delete, e.g. '3,7'")
    p.add_argument("--tree-method", choices=gr.TREE_METHODS, default="prufer")
    p.add_argument("--extra-links", type=int, default=0, help="random links added afterwards")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"),
                        help="output format (experiment: csv, otherwise json)")
    common.add_argument("--config", help="JSON file whose entries override flags")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gsr", parents=[common],
                                     description="Sparse recovery with connected-subgraph measurements.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", parents=[common], help="generate a graph file")
    p.add_argument("--type", choices=GRAPH_TYPES, required=True)
    p.add_argument("--n", type=int, required=True)
    _graph_flags(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("construct", parents=[common], help="build a measurement plan")
    p.add_argument("--graph", help=f"graph file, or a generator name: {', '.join(GRAPH_TYPES)}")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--c", type=float, default=2.0, help="row budget factor for k >= 2")
    p.add_argument("--partition", help="partition file (one group per line)")
    p.add_argument("--rows", type=int, help="row count for the markov sampler")
    p.add_argument("--trace", help="write the algorithm1 reduction trace (JSON lines)")
    _graph_flags(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", parents=[common], help="check feasibility and identifiability")
    p.add_argument("--plan", required=True)
    p.add_argument("--graph", help="graph file for the feasibility check")
    p.add_argument("--k", type=int)
    p.add_argument("--budget", type=int, default=60_000, help="max column subsets to test")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("recover", parents=[common], help="recover x from measurements y")
    p.add_argument("--plan", required=True)
    p.add_argument("--y", required=True, help="measurement vector CSV")
    p.add_argument("--hub-errors", action="store_true", help="estimate hub-sum row errors")
    p.add_argument("--solver", choices=("lp", "admm"), default="lp")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("experiment", parents=[common], help="run a figure experiment")
    p.add_argument("name", choices=("fig6", "fig7", "fig8"))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--ns", help="fig7 node counts, e.g. '64,128,256'")
    p.add_argument("--ms", help="fig7 BA m values")
    p.add_argument("--ks", help="fig8 support sizes")
    p.add_argument("--solver", choices=("lp", "admm"))
    p.set_defaults(func=cmd_experiment)
    return parser


def _apply_config(args, data: dict) -> None:
    for key, value in data.items():
        attr = key.replace("-", "_")
        if attr in ("func", "command", "config") or not hasattr(args, attr):
            raise ExperimentError(f"config key {key!r} is not an option of '{args.command}'")
        setattr(args, attr, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.format is None:
        args.format = "csv" if args.command == "experiment" else "json"
    try:
        if args.config and args.command != "experiment":
            _apply_config(args, load_config(args.config))
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (gr.GraphError, ConstructionError, PlanError, PartitionError, ExperimentError,
            VerificationError, RecoveryError, ReductionError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
