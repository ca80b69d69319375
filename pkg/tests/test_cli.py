import json

import numpy as np
import pytest

from archopt.cli import main
from archopt.design_space import DesignSpace
from archopt.record import RunRecord
from archopt.spaces import turbofan_space


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_metrics_turbofan(capsys):
    code, out, _ = run(capsys, "metrics", "turbofan")
    assert code == 0
    d = json.loads(out)
    assert d["ir"] == pytest.approx(3.89, abs=0.02)
    assert d["cr"] == pytest.approx(2.10, abs=0.02)
    assert d["crf"] == pytest.approx(0.55, abs=0.01)
    assert d["meta"]["seed"] == 0 and d["meta"]["command"] == "metrics"


def test_metrics_text_and_csv(capsys):
    code, out, _ = run(capsys, "--format", "text", "metrics", "toy")
    assert code == 0 and "IR" in out
    code, out, _ = run(capsys, "metrics", "table2", "--format", "csv")
    assert code == 0 and out.startswith("variable,inactive_rate")


def test_sample_table4(capsys):
    code, out, _ = run(capsys, "sample", "table4", "--n", "100", "--grouping", "xact",
                       "--weighting", "nact")
    assert code == 0
    d = json.loads(out)
    assert [round(100 * w) for w in d["group_weights"]] == [36, 36, 18, 9]
    assert d["group_quotas"] == [37, 36, 18, 9]
    assert d["group_sizes"] == [3, 4, 1, 1]


def test_sample_nonhierarchical_csv(capsys):
    code, out, _ = run(capsys, "sample", "gnc", "--n", "8", "--method", "nonhierarchical",
                       "--format", "csv", "--seed", "3")
    rows = out.strip().splitlines()
    assert code == 0 and len(rows) == 9 and rows[0].startswith("n_sensors")


def test_correct(tmp_path, capsys):
    inp = tmp_path / "x.json"
    inp.write_text(json.dumps([[0, 1, 1, 1], [1, 1, 0, 1]]))
    code, out, _ = run(capsys, "correct", "toy", "--input", str(inp), "--mode", "eager_similar")
    d = json.loads(out)
    assert code == 0 and all(d["valid"])
    csv_in = tmp_path / "x.csv"
    csv_in.write_text("a,b,c,d\n0,1,1,1\n")
    code, out, _ = run(capsys, "correct", "toy", "--input", str(csv_in), "--format", "csv")
    assert code == 0 and len(out.strip().splitlines()) == 2


def test_export_space_round_trip(tmp_path, capsys):
    path = tmp_path / "turbofan.json"
    assert run(capsys, "export-space", "turbofan", "--out", str(path))[0] == 0
    space = DesignSpace.from_json(str(path))
    assert space == turbofan_space()
    X1, _ = space.enumerate_valid()
    X2, _ = turbofan_space().enumerate_valid()
    np.testing.assert_array_equal(X1, X2)
    code, out, _ = run(capsys, "metrics", str(path))
    assert code == 0 and json.loads(out)["n_valid_discr"] == 70


def test_user_errors(tmp_path, capsys):
    assert run(capsys, "metrics", "nope")[0] == 1
    assert run(capsys, "metrics", "toy", "--unknown-flag")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"variables": [\n  {"name": "a", "kind": "integer", "lower": 0}\n]}')
    code, _, err = run(capsys, "metrics", str(bad))
    assert code == 1 and "variables[0]" in err and "bounds" in err
    broken = tmp_path / "broken.json"
    broken.write_text('{"variables": [\n  {"name": "a",, }\n]}')
    code, _, err = run(capsys, "metrics", str(broken))
    assert code == 1 and "line 2" in err
    assert run(capsys, "rank", str(tmp_path / "none"))[0] == 1
    assert run(capsys, "optimize", "toy", "--algo", "bo", "--integration", "naive")[0] == 1


def test_internal_error_exit_code(monkeypatch, capsys):
    import archopt.cli as cli

    def boom(args):
        raise RuntimeError("bug")

    monkeypatch.setattr(cli, "cmd_metrics", boom)
    code = cli.main(["metrics", "toy"])
    assert code == 2 and "internal error" in capsys.readouterr().err


def test_optimize_deterministic_files(tmp_path, capsys):
    paths = [tmp_path / f"r{i}.jsonl" for i in range(2)]
    for p in paths:
        code, out, _ = run(capsys, "--seed", "5", "--threads", "1", "optimize", "toy", "--algo", "bo",
                           "--n-doe", "3", "--n-infill", "3", "--out", str(p))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    summary = json.loads(out)
    assert summary["n_evaluations"] == 6 and summary["meta"]["seed"] == 5
    assert RunRecord.read(str(paths[0])).meta["seed"] == 5


def test_optimize_resume(tmp_path, capsys):
    full = tmp_path / "full.jsonl"
    args = ["optimize", "gnc", "--algo", "nsga2", "--pop-size", "10", "--n-eval", "40"]
    assert run(capsys, *args, "--out", str(full))[0] == 0
    part = tmp_path / "part.jsonl"
    part.write_text("".join(full.read_text().splitlines(keepends=True)[:17]))
    assert run(capsys, *args, "--resume", str(part), "--out", str(part))[0] == 0
    assert part.read_bytes() == full.read_bytes()


def test_bench_and_rank(tmp_path, capsys):
    cfg = tmp_path / "bench.json"
    cfg.write_text(json.dumps({"problems": ["toy"], "repetitions": 2, "algorithms": [
        {"algorithm": "nsga2", "label": "a", "pop_size": 6, "n_eval": 18},
        {"algorithm": "nsga2", "label": "b", "pop_size": 6, "n_eval": 18},
    ]}))
    out_dir = tmp_path / "runs"
    plot = tmp_path / "plot.csv"
    code, out, _ = run(capsys, "bench", str(cfg), "--out-dir", str(out_dir), "--emit-plot", str(plot))
    assert code == 0 and len(json.loads(out)["runs"]) == 4
    assert plot.read_text().startswith("problem,config,step,q25,median,q75")
    # both labels use identical settings and seeds: identical runs, all rank 1
    code, out, _ = run(capsys, "rank", str(out_dir))
    d = json.loads(out)
    assert code == 0 and d["ranks"]["toy"] == {"a": 1, "b": 1}
    code, out, _ = run(capsys, "rank", str(out_dir), "--format", "text")
    assert "rank1%" in out
    first = (tmp_path / "r1.csv")
    second = (tmp_path / "r2.csv")
    run(capsys, "rank", str(out_dir), "--format", "csv", "--out", str(first))
    run(capsys, "rank", str(out_dir), "--format", "csv", "--out", str(second))
    assert first.read_bytes() == second.read_bytes()
