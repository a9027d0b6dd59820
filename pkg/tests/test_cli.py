import csv
import io
import json

import pytest

from dispersion.cli import (
    CSV_FIELDS,
    EXIT_CONFIG,
    EXIT_MONITOR,
    EXIT_OK,
    EXIT_TIMEOUT,
    RunConfig,
    SweepConfig,
    build,
    emit_trace,
    main,
    replay_trace,
    run_once,
    sweep,
    sweep_rows,
)
from dispersion.core import ConfigError


@pytest.fixture
def p3_file(tmp_path):
    path = tmp_path / "p3.txt"
    path.write_text("3 2\n0 0 1 0\n1 1 2 0\n")
    return str(path)


def test_run_svl_p2():
    r = run_once(RunConfig(algorithm="svl", family="path", n=2, k=2, l=1))
    assert r.steps_to_dispersion == 5 and r.max_level_observed == 1
    assert r.monitors_passed and r.m_prime == 1


def test_run_simple_dfs_fixed_p3(p3_file):
    cfg = RunConfig(algorithm="simple-dfs", graph_file=p3_file, k=3, ids="1,2,3", start=[0])
    assert run_once(cfg).steps_to_dispersion == 2


def test_simple_dfs_rejects_many_starts():
    with pytest.raises(ConfigError):
        build(RunConfig(algorithm="simple-dfs", family="ring", n=8, k=4, l=2))
    assert main(["--algorithm", "simple-dfs", "--family", "ring", "--n", "8",
                 "--k", "4", "--l", "2"]) == EXIT_CONFIG


@pytest.mark.parametrize(
    "cfg",
    [
        RunConfig(k=20, n=10),
        RunConfig(k=3, l=4),
        RunConfig(ids="1,1,2", k=3),
        RunConfig(ids="1,x", k=2),
        RunConfig(start=[0, 99], k=4, l=2),
        RunConfig(family="ring", n=2, k=2),
        RunConfig(graph_file="/nonexistent/graph.txt"),
    ],
)
def test_bad_configs(cfg):
    with pytest.raises(ConfigError):
        build(cfg)


def test_output_file_and_json(tmp_path):
    out = tmp_path / "r.json"
    assert main(["--family", "path", "--n", "2", "--k", "2", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["steps_to_dispersion"] == 5
    assert {v["name"] for v in data["invariant_verdicts"]} >= {"level-bound", "memory-audit"}
    assert all(v["pass"] for v in data["invariant_verdicts"])


def test_timeout_exit(capsys):
    code = main(["--family", "ring", "--n", "40", "--k", "30", "--l", "3", "--max-steps", "2"])
    assert code == EXIT_TIMEOUT
    assert json.loads(capsys.readouterr().out)["steps_to_dispersion"] == "timeout"


def test_trace_lines(tmp_path):
    path = tmp_path / "t.jsonl"
    r = emit_trace(RunConfig(family="path", n=2, k=2), str(path))
    lines = path.read_text().splitlines()
    assert len(lines) == 6 == r.steps_to_dispersion + 1
    first = json.loads(lines[0])
    assert first["t"] == 0 and len({a["node"] for a in first["agents"]}) == 1

    emit_trace(RunConfig(family="ring", n=5, k=1), str(path))
    assert len(path.read_text().splitlines()) == 1


def test_replay_cli(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    args = ["--family", "grid", "--n", "12", "--k", "9", "--l", "3", "--seed", "4"]
    assert main(args + ["--trace", str(trace), "--out", str(tmp_path / "r.json")]) == EXIT_OK
    live = json.loads((tmp_path / "r.json").read_text())["invariant_verdicts"]
    capsys.readouterr()
    assert main(args + ["--replay", str(trace)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == live

    # corrupt the trace: a settled agent jumps to another node
    lines = [json.loads(x) for x in trace.read_text().splitlines()]
    rec = lines[-1]
    victim = next(a for a in rec["agents"] if a["mode"] == "settled")
    victim["node"] = (victim["node"] + 1) % 12
    trace.write_text("".join(json.dumps(x) + "\n" for x in lines))
    assert main(args + ["--replay", str(trace)]) == EXIT_MONITOR
    verdicts = replay_trace(RunConfig(family="grid", n=12, k=9, l=3, seed=4), str(trace))
    assert not all(v.passed for v in verdicts)


def test_save_graph_round_trip(tmp_path):
    gfile = tmp_path / "g.txt"
    args = ["--family", "tree", "--n", "20", "--k", "10", "--l", "2", "--seed", "3"]
    assert main(args + ["--save-graph", str(gfile), "--out", str(tmp_path / "a.json")]) == EXIT_OK
    assert main(["--graph-file", str(gfile), "--k", "10", "--l", "2", "--seed", "3",
                 "--out", str(tmp_path / "b.json")]) == EXIT_OK
    assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()


# -- sweeps ---------------------------------------------------------------------


def parse(table):
    body = [line for line in table.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_sweep_levels():
    cfg = SweepConfig(families=["ring"], ns=[32], ks=[16], ls=[1, 2, 4], reps=2, base_seed=5)
    table = sweep(cfg)
    rows = parse(table)
    assert len(rows) == 6
    assert list(rows[0]) == CSV_FIELDS
    assert all(r["verdicts"] == "pass" and r["status"] == "ok" for r in rows)
    footer = table.splitlines()[-1]
    assert footer.startswith("# max_bound_ratio=")
    assert float(footer.split("=")[1]) == max(float(r["bound_ratio"]) for r in rows)


def test_sweep_reps_differ_only_in_seed():
    rows = sweep_rows(SweepConfig(ns=[24], ks=[12], ls=[3], reps=2))
    a, b = rows
    assert a["seed"] != b["seed"] and (a["rep"], b["rep"]) == (0, 1)
    same = {"algorithm", "family", "n", "k", "l"}
    assert all(a[f] == b[f] for f in same)


def test_sweep_is_deterministic_and_parallel_safe():
    cfg = SweepConfig(algorithms=["svl", "zombie"], families=["tree", "grid"],
                      ns=[16], ks=[8], ls=[2], reps=2, base_seed=9)
    serial = sweep(cfg)
    cfg.workers = 2
    assert sweep(cfg) == serial


def test_sweep_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        sweep(SweepConfig(ls=[]))
    with pytest.raises(ConfigError):
        sweep(SweepConfig(ns=list(range(10, 20)), ks=[2], reps=5, max_cells=20))
    with pytest.raises(ConfigError):
        SweepConfig.from_dict({"bogus": 1})
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"ks": []}))
    assert main(["--sweep", str(spec)]) == EXIT_CONFIG


def test_sweep_bad_cell_is_reported():
    rows = sweep_rows(SweepConfig(algorithms=["simple-dfs"], ls=[1, 2]))
    assert [r["status"] for r in rows] == ["ok", "config-error"]


def test_sweep_cli(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"algorithms": ["svl"], "families": ["path"], "ns": [10],
                                "ks": [5], "ls": [1, 2], "reps": 1}))
    out = tmp_path / "t.csv"
    assert main(["--sweep", str(spec), "--out", str(out)]) == EXIT_OK
    assert len(parse(out.read_text())) == 2
