import csv
import math
from pathlib import Path

import pytest

from wcbs import bench
from wcbs.bench import (
    CSV_COLUMNS, MethodSpec, ResultRow, RunSpec, main, parse_agent_counts,
    read_rows, run_benchmark, run_instance, seed_means, speedup, summarize,
)
from wcbs.config import ConfigError
from wcbs.grid import AgentTask, GridMap

DATA = Path(__file__).parent / "data"
MAP = str(DATA / "empty-32-32.map")
SCEN = str(DATA / "empty-32-32-random-1.scen")


def row(method, seed, outcome, wall, agents=10, **kw):
    return ResultRow(map="m", method=method, variant="vanilla", w_so=2.0, w_h=1.0, r=math.inf,
                     improved_lb=False, high_level="focal", prioritize_conflicts=False,
                     agents=agents, seed=seed, outcome=outcome, wall_time=wall, **kw)


def test_speedup_examples():
    assert speedup(4.0, 2.0, "solved") == 2.0
    assert speedup(1.0, 4.0, "solved") == 0.25
    assert speedup(10.0, 1.0, "timeout") is None
    with pytest.raises(ValueError):
        speedup(0.0, 1.0, "solved")
    with pytest.raises(ValueError):
        speedup(1.0, -1.0, "solved")


def test_summarize_hand_fixture():
    rows = [
        row("base", 0, "solved", 2.0), row("base", 1, "solved", 1.0),
        row("base", 2, "timeout", 10.0), row("base", 3, "solved", 3.0),
        row("new", 0, "solved", 1.0), row("new", 1, "solved", 2.0),
        row("new", 2, "solved", 0.5), row("new", 3, "solved", 1.0),
    ]
    by_name = {s.method: s for s in summarize(rows, "base")}
    new = by_name["new"]
    # speedups 2, 0.5, 3; the timed-out baseline instance is censored
    assert new.n_compared == 3
    assert new.max_speedup == 3.0
    assert new.median_speedup == 2.0
    assert new.pct_faster == pytest.approx(200 / 3)
    assert new.n_solved == 4
    base = by_name["base"]
    assert base.median_speedup == 1.0 and base.pct_faster == 0.0 and base.n_solved == 3


def test_summarize_all_censored():
    rows = [row("base", 0, "timeout", 10.0), row("new", 0, "solved", 1.0)]
    new = {s.method: s for s in summarize(rows, "base")}["new"]
    assert new.n_compared == 0 and new.median_speedup is None


def test_summarize_unknown_baseline():
    with pytest.raises(ValueError):
        summarize([row("a", 0, "solved", 1.0)], "b")


def test_seed_means():
    rows = [row("a", s, "solved", float(s + 1), sum_of_costs=10 * (s + 1)) for s in range(3)]
    rows.append(row("a", 3, "timeout", 10.0))
    (m,) = seed_means(rows)
    assert m.seeds == 4 and m.solved == 3
    assert m.mean_wall_time == pytest.approx(4.0)
    assert m.mean_sum_of_costs == pytest.approx(20.0)


def test_parse_agent_counts():
    assert parse_agent_counts("5,10,15") == [5, 10, 15]
    assert parse_agent_counts("50:50:200") == [50, 100, 150, 200]
    with pytest.raises(ConfigError):
        parse_agent_counts("a,b")
    with pytest.raises(ConfigError):
        parse_agent_counts("1:0:5")


def test_method_labels():
    assert MethodSpec().label == "vanilla_wso2"
    assert MethodSpec("wf", 2, 4, 5).label == "wf_wso2_wh4_r5"
    assert MethodSpec("wo", 2, 1.5, improved_lb=True).label == "wo_wso2_wh1.5_lb+"
    assert MethodSpec("pp", w_h=2).label == "pp_wh2"
    assert MethodSpec("cbspp", w_h=2, prioritize_conflicts=True).label == "cbspp_wh2+pc"
    assert MethodSpec(high_level="optimal").label == "cbs"
    with pytest.raises(ConfigError):
        MethodSpec("wo", 2, 3)
    with pytest.raises(ConfigError):
        MethodSpec("astar")


def test_cardinality_columns_populated():
    grid = GridMap.from_rows([".....", "@@.@@"])
    tasks = [AgentTask(0, (0, 0), (0, 4)), AgentTask(1, (0, 4), (0, 0))]
    r = run_instance(grid, tasks, MethodSpec(prioritize_conflicts=True), 10, "bay", 0)
    assert r.outcome == "solved"
    assert r.cardinal + r.semi_cardinal + r.non_cardinal + r.unknown == r.ct_expanded > 0
    plain = run_instance(grid, tasks, MethodSpec(), 10, "bay", 0)
    assert plain.cardinal == plain.semi_cardinal == plain.non_cardinal == plain.unknown == 0


def test_timeout_row_wall_time_is_budget():
    grid = GridMap.from_rows(["..."])
    tasks = [AgentTask(0, (0, 0), (0, 2)), AgentTask(1, (0, 2), (0, 0))]
    r = run_instance(grid, tasks, MethodSpec(), 0.2, "line", 0)
    assert r.outcome == "timeout" and r.wall_time >= 0.2


def test_skip_rule_stops_series(monkeypatch, tmp_path):
    calls = []

    def fake(grid, tasks, method, timeout, map_name, seed):
        calls.append((len(tasks), seed))
        outcome = "timeout" if len(tasks) >= 20 else "solved"
        return row(method.label, seed, outcome, timeout if outcome == "timeout" else 0.1,
                   agents=len(tasks))

    monkeypatch.setattr(bench, "run_instance", fake)
    spec = RunSpec(MAP, SCEN, [10, 20, 30], seeds=(0, 1), out_path=str(tmp_path / "r.csv"))
    rows = run_benchmark(spec)
    assert sorted({n for n, _ in calls}) == [10, 20]
    assert len(rows) == 4
    with open(tmp_path / "r.csv") as fh:
        assert sum(1 for _ in fh) == 5


def test_skip_rule_needs_every_seed(monkeypatch):
    def fake(grid, tasks, method, timeout, map_name, seed):
        outcome = "timeout" if seed == 0 else "solved"
        return row(method.label, seed, outcome, 1.0, agents=len(tasks))

    monkeypatch.setattr(bench, "run_instance", fake)
    rows = run_benchmark(RunSpec(MAP, SCEN, [10, 20, 30], seeds=(0, 1)))
    assert sorted({r.agents for r in rows}) == [10, 20, 30]


def strip_wall(path):
    with open(path, newline="") as fh:
        recs = list(csv.DictReader(fh))
    for rec in recs:
        rec.pop("wall_time")
    return recs


def test_rerun_is_identical_except_wall_time(tmp_path):
    methods = (MethodSpec(), MethodSpec("wf", 2, 4, 5), MethodSpec("pp", w_h=2))
    for name in ("a.csv", "b.csv"):
        run_benchmark(RunSpec(MAP, SCEN, [8, 16], seeds=(0, 1), methods=methods,
                              timeout=30, out_path=str(tmp_path / name)))
    assert strip_wall(tmp_path / "a.csv") == strip_wall(tmp_path / "b.csv")
    rows = read_rows(str(tmp_path / "a.csv"))
    assert len(rows) == 12 and all(r.outcome == "solved" for r in rows)


def test_parallel_workers_match_serial(tmp_path):
    for name, workers in (("s.csv", 1), ("p.csv", 2)):
        run_benchmark(RunSpec(MAP, SCEN, [8], seeds=(0, 1, 2), timeout=30,
                              out_path=str(tmp_path / name), workers=workers))
    assert strip_wall(tmp_path / "s.csv") == strip_wall(tmp_path / "p.csv")


def test_cli_run_and_summarize(tmp_path, capsys):
    for variant, extra in (("vanilla", []), ("wf", ["--wh", "4", "--r", "5"])):
        path = tmp_path / f"{variant}.csv"
        assert main(["run", "--map", MAP, "--scen", SCEN, "--agents", "5,10", "--seeds", "0,1",
                     "--variant", variant, "--wso", "2", "--timeout", "30", "--out", str(path),
                     *extra]) == 0
    with open(tmp_path / "vanilla.csv") as fh:
        assert next(csv.reader(fh)) == list(CSV_COLUMNS)
    summary = tmp_path / "summary.csv"
    means = tmp_path / "means.csv"
    assert main(["summarize", str(tmp_path / "vanilla.csv"), str(tmp_path / "wf.csv"),
                 "--baseline", "vanilla_wso2", "--out", str(summary), "--means", str(means)]) == 0
    with open(summary) as fh:
        recs = {r["method"]: r for r in csv.DictReader(fh)}
    assert set(recs) == {"vanilla_wso2", "wf_wso2_wh4_r5"}
    assert recs["wf_wso2_wh4_r5"]["n_compared"] == "4"


def test_cli_errors(tmp_path, capsys):
    assert main(["run", "--map", "missing.map", "--scen", SCEN, "--agents", "5",
                 "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["run", "--map", MAP, "--scen", SCEN, "--agents", "5", "--variant", "wo",
                 "--wso", "2", "--wh", "3", "--out", str(tmp_path / "x.csv")]) == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["run", "--map", MAP])
