import json

import numpy as np
import pytest

from gsr.cli import (EXIT_IO, EXIT_OK, EXIT_PARAMS, EXIT_USAGE, EXIT_VERIFY_FAILED, main)
from gsr.experiments import ResultTable
from gsr.graph import load_graph
from gsr.plan import MeasurementPlan
from gsr.recovery import dumps_dense, loads_sparse


def test_graph_and_construct(tmp_path, capsys):
    g = tmp_path / "g.txt"
    assert main(["graph", "--type", "g4", "--n", "64", "--out", str(g)]) == EXIT_OK
    assert load_graph(g).n == 64
    plan = tmp_path / "plan.json"
    assert main(["construct", "--graph", str(g), "--k", "2", "--method", "g4",
                 "--out", str(plan)]) == EXIT_OK
    p = MeasurementPlan.load(plan)
    assert f"rows: {p.m}" in capsys.readouterr().out
    assert main(["verify", "--plan", str(plan), "--graph", str(g), "--k", "2",
                 "--budget", "10", "--out", str(tmp_path / "v.json")]) == EXIT_OK
    v = json.loads((tmp_path / "v.json").read_text())
    assert v["feasible"] and v["identifiability"]["status"] == "unverifiable"


def test_verify_detects_bad_plan(tmp_path):
    plan = tmp_path / "plan.json"
    assert main(["construct", "--graph", "line", "--n", "6", "--method", "complete",
                 "--out", str(plan)]) == EXIT_VERIFY_FAILED
    assert main(["construct", "--n", "6", "--method", "complete", "--out", str(plan)]) == EXIT_OK
    g = tmp_path / "g.txt"
    main(["graph", "--type", "line", "--n", "6", "--out", str(g)])
    assert main(["verify", "--plan", str(plan), "--graph", str(g)]) == EXIT_VERIFY_FAILED


def test_recover_round_trip(tmp_path):
    plan_path = tmp_path / "plan.json"
    main(["construct", "--graph", "g4", "--n", "20", "--method", "g4", "--out", str(plan_path)])
    plan = MeasurementPlan.load(plan_path)
    x = np.zeros(20)
    x[7] = -1.5
    (tmp_path / "y.csv").write_text(dumps_dense(plan.apply(x)))
    out = tmp_path / "x.csv"
    assert main(["recover", "--plan", str(plan_path), "--y", str(tmp_path / "y.csv"),
                 "--format", "csv", "--out", str(out)]) == EXIT_OK
    got = loads_sparse(out.read_text())
    assert got.support == [7] and got.entries[7] == pytest.approx(-1.5)
    assert main(["recover", "--plan", str(plan_path), "--y", str(tmp_path / "y.csv"),
                 "--hub-errors", "--out", str(tmp_path / "r.json")]) == EXIT_OK
    assert json.loads((tmp_path / "r.json").read_text())["hub_error_estimates"]


def test_experiment_with_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 60, "trials": 2, "link_step": 30}))
    out = tmp_path / "fig6.csv"
    assert main(["experiment", "fig6", "--n", "500", "--config", str(cfg),
                 "--out", str(out)]) == EXIT_OK
    t = ResultTable.from_csv(out.read_text())
    assert t.meta["n"] == 60 and t.column("links") == [59, 89, 119]


def test_seed_changes_random_graph(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["graph", "--type", "er", "--n", "40", "--seed", "1", "--out", str(a)])
    main(["graph", "--type", "er", "--n", "40", "--seed", "2", "--out", str(b)])
    assert a.read_text() != b.read_text()


def test_exit_codes(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["construct", "--method", "nope"])
    assert e.value.code == EXIT_USAGE
    assert main(["verify", "--plan", str(tmp_path / "missing.json")]) == EXIT_IO
    assert main(["graph", "--type", "grid", "--n", "10"]) == EXIT_PARAMS
    assert main(["construct", "--n", "5", "--k", "1", "--method", "line_k"]) == EXIT_PARAMS
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert main(["graph", "--type", "line", "--n", "4", "--config", str(bad)]) == EXIT_PARAMS
