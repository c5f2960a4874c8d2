import csv
import json
import math

import pytest

from geonet.bench import (
    BENCH_COLUMNS,
    WARMUP_RUNS,
    ActivationConfig,
    BenchRecord,
    bench_scalability,
    parallel_model,
    parse_dimred_method,
    run_activation_experiment,
    strip_timings,
)
from geonet.cli import cli_main


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_no_args_is_a_usage_error(capsys):
    assert cli_main([]) == 1
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["bench", "--bogus", "1", "--out", "x.csv"], ["bench"]])
def test_bad_invocations_exit_one(argv, capsys):
    assert cli_main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert cli_main(["--help"]) == 0
    assert "gen-graph" in capsys.readouterr().out


def test_bench_writes_four_rows(tmp_path):
    out = tmp_path / "b.csv"
    assert cli_main(["bench", "--sizes", "100,200", "--p", "0.05", "--repeats", "3", "--seed", "1", "--out", str(out)]) == 0
    rows = _rows(out)
    assert len(rows) == 4
    assert tuple(rows[0].keys()) == BENCH_COLUMNS
    assert sorted((r["n"], r["method"]) for r in rows) == [("100", "adjacency"), ("100", "gap"),
                                                             ("200", "adjacency"), ("200", "gap")]
    assert all(r["repeats"] == "3" and r["seed"] == "1" for r in rows)


@pytest.mark.parametrize("flag,value", [("--p", "1.5"), ("--repeats", "0"), ("--sizes", "10,x")])
def test_invalid_flag_named_in_message(tmp_path, capsys, flag, value):
    argv = ["bench", "--sizes", "100", flag, value, "--out", str(tmp_path / "b.csv")]
    assert cli_main(argv) == 1
    assert flag in capsys.readouterr().err


def test_out_extension_must_be_csv_or_json(tmp_path, capsys):
    assert cli_main(["bench", "--sizes", "100", "--out", str(tmp_path / "b.txt")]) == 1
    assert "--out" in capsys.readouterr().err


def test_missing_input_is_a_runtime_error(tmp_path, capsys):
    code = cli_main(["encode", "--graph", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "e.bin")])
    assert code == 2
    assert "nope.txt" in capsys.readouterr().err


def test_missing_mnist_names_the_path(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("GEONET_DATA_DIR", raising=False)
    code = cli_main(["dimred", "--data-dir", str(tmp_path / "idx"), "--out", str(tmp_path / "d.json")])
    assert code == 2
    assert str(tmp_path / "idx") in capsys.readouterr().err


def test_dimred_rejects_bad_method(tmp_path, capsys):
    assert cli_main(["dimred", "--method", "pca:zero", "--out", str(tmp_path / "d.json")]) == 1
    assert "--method" in capsys.readouterr().err


def test_gen_graph_encode_metrics_pipeline(tmp_path):
    graph, blob, rep, met = (tmp_path / x for x in ("g.txt", "g.bin", "enc.json", "m.json"))
    for _ in range(2):
        assert cli_main(["gen-graph", "--model", "er", "--n", "60", "--p", "0.1", "--seed", "3", "--out", str(graph)]) == 0
        first = graph.read_bytes()
    assert graph.read_bytes() == first
    assert cli_main(["encode", "--graph", str(graph), "--partition", "louvain", "--workers", "2",
                     "--out", str(blob), "--report", str(rep)]) == 0
    summary = json.loads(rep.read_text())
    assert summary["bytes"] == len(blob.read_bytes())
    assert summary["adjacency_bytes"] == math.ceil(60 * 59 / 2 / 8) + 16
    assert cli_main(["metrics", "--graph", str(graph), "--partition", "range:4", "--out", str(met)]) == 0
    m = json.loads(met.read_text())
    assert 0 <= m["clustering_coefficient"] <= 1 and m["k"] == 4


@pytest.mark.parametrize("model,extra", [("ws", ["--k", "4", "--beta", "0.2"]), ("ba", ["--m", "3"])])
def test_gen_graph_models(tmp_path, model, extra):
    out = tmp_path / "g.txt"
    assert cli_main(["gen-graph", "--model", model, "--n", "30", *extra, "--out", str(out)]) == 0
    assert out.read_text().startswith("# nodes 30")


def test_gen_graph_parameter_violation_is_runtime_error(tmp_path):
    assert cli_main(["gen-graph", "--model", "ws", "--n", "10", "--k", "3", "--out", str(tmp_path / "g.txt")]) == 2


def test_bench_json_run_twice_identical(tmp_path):
    docs = []
    for i in range(2):
        out = tmp_path / f"b{i}.json"
        assert cli_main(["bench", "--sizes", "100,300", "--repeats", "2", "--workers", "2", "--seed", "5",
                         "--out", str(out)]) == 0
        docs.append(json.loads(out.read_text()))
    assert strip_timings(docs[0]) == strip_timings(docs[1])
    assert docs[0]["warmup_runs"] == WARMUP_RUNS
    assert docs[0]["config"]["seed"] == 5
    assert {r["method"] for r in docs[0]["records"]} == {"gap", "gap-parallel:2", "adjacency"}


def test_train_grid_and_rerun(tmp_path):
    outs = []
    grid, out = tmp_path / "grid.csv", tmp_path / "t.json"
    for _ in range(2):
        argv = ["train", "--dataset", "xor", "--activation", "poly:3", "--epochs", "5", "--seeds", "2",
                "--seed", "7", "--grid", str(grid), "--out", str(out)]
        assert cli_main(argv) == 0
        outs.append((json.loads(out.read_text()), grid.read_bytes()))
    assert len(_rows(grid)) == 40_000
    assert strip_timings(outs[0][0]) == strip_timings(outs[1][0])
    assert outs[0][1] == outs[1][1]
    assert [r["seed"] for r in outs[0][0]["runs"]] == [7, 8]


def test_config_echo_reruns_the_experiment():
    cfg = ActivationConfig(epochs=3, seeds=(1,), grid_size=10)
    first = run_activation_experiment("moons", "lrelu:0.01", cfg)
    echo = first.config
    again = run_activation_experiment(echo["dataset"], echo["activation"], ActivationConfig(
        **{k: (tuple(v) if k == "seeds" else v) for k, v in echo.items() if k not in ("dataset", "activation")}))
    assert strip_timings(first.to_dict()) == strip_timings(again.to_dict())
    assert first.summary["grid_rows"] == 100


def test_unknown_dataset_rejected():
    with pytest.raises(ValueError):
        run_activation_experiment("spirals", "poly:3", ActivationConfig(epochs=1, seeds=(0,)))


def test_adjacency_skipped_above_cap():
    recs = bench_scalability([120], repeats=1, adjacency_cap=100)
    adj = next(r for r in recs if r.method == "adjacency")
    assert adj.skipped and adj.row()["encode_ms_median"] == "skipped"
    assert adj.bytes == math.ceil(120 * 119 / 2 / 8) + 16


def test_bench_records_and_model():
    recs = bench_scalability([100, 200], repeats=1, partition_strategy="range:5")
    assert all(r.partition == "range:5" and r.encode_ms_median >= 0 and r.bytes > 0 for r in recs)
    model = parallel_model(recs, 4)
    gap = [r for r in recs if r.method == "gap"]
    assert [m["ideal_parallel_ms"] for m in model] == [r.encode_ms_median / 4 for r in gap]


@pytest.mark.parametrize("kwargs", [{"repeats": 0}, {"bytes": 0}, {"encode_ms_median": -1.0}])
def test_bench_record_invariants(kwargs):
    base = dict(n=10, p=0.1, method="gap", partition="range", encode_ms_median=1.0, bytes=5,
                inter_edges=0, seed=0, repeats=1)
    with pytest.raises(ValueError):
        BenchRecord(**{**base, **kwargs})


@pytest.mark.parametrize("call", [lambda: bench_scalability([]), lambda: bench_scalability([10], repeats=0),
                                  lambda: bench_scalability([10], p=2.0)])
def test_bench_precondition_violations(call):
    with pytest.raises(ValueError):
        call()


@pytest.mark.parametrize("method,parsed", [("baseline", ("baseline", None)), ("pca:50", ("pca", 50)),
                                           ("ae:32", ("ae", 32)), ("prune:0.5", ("prune", 0.5))])
def test_parse_dimred_method(method, parsed):
    assert parse_dimred_method(method) == parsed


@pytest.mark.parametrize("method", ["pca", "pca:0", "ae:-1", "prune:2", "svd:3", "baseline:1"])
def test_parse_dimred_method_rejects(method):
    with pytest.raises(ValueError):
        parse_dimred_method(method)


def test_prune_cli_end_to_end(tmp_path, mnist_dir):
    out, sens = tmp_path / "p.json", tmp_path / "s.json"
    argv = ["prune", "--fraction", "0.5", "--data-dir", str(mnist_dir), "--n-train", "600", "--n-test", "200",
            "--epochs", "1", "--fine-tune-epochs", "1", "--sensitivity", str(sens), "--out", str(out)]
    assert cli_main(argv) == 0
    run = json.loads(out.read_text())["runs"][0]
    assert run["mask_zeros_preserved"] is True
    assert run["pruned_weights"] == run["total_weights"] // 2
    assert json.loads(sens.read_text())["layers"]
