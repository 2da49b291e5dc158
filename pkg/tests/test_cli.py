"""CLI commands: file outputs, exit codes, determinism, error surfaces."""

import json

from hqcg.cli import main

SMALL_SYNTH = ["synth", "--classes", "3", "--len", "32", "--samples", "60",
               "--seed", "5"]
SMALL_TRAIN = ["--epochs", "2", "--batch-size", "16", "--qubits", "6",
               "--group-size", "3", "--seed", "5"]


def _synth(tmp_path, extra=()):
    data_dir = tmp_path / "data"
    code = main(SMALL_SYNTH + list(extra) + ["--out", str(data_dir)])
    assert code == 0
    return data_dir


def test_synth_writes_files_and_summary(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    assert (data_dir / "dataset.csv").exists()
    assert (data_dir / "manifest.json").exists()
    out = capsys.readouterr().out
    assert "samples 60" in out and "classes 3" in out and "seed 5" in out


def test_synth_rerun_is_byte_identical(tmp_path):
    a = _synth(tmp_path / "a")
    b = _synth(tmp_path / "b")
    assert (a / "dataset.csv").read_bytes() == (b / "dataset.csv").read_bytes()
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


def test_synth_invalid_classes_exits_2(tmp_path, capsys):
    code = main(["synth", "--classes", "0", "--len", "32", "--samples", "10",
                 "--out", str(tmp_path / "x")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_unknown_flag_exits_2(tmp_path, capsys):
    assert main(["synth", "--bogus", "1", "--out", str(tmp_path)]) == 2


def _train(tmp_path, data_dir, extra=(), out_name="run"):
    out_dir = tmp_path / out_name
    code = main(["train", "--data", str(data_dir), "--out", str(out_dir)]
                + SMALL_TRAIN + list(extra))
    return code, out_dir


def test_train_writes_checkpoint_and_reports(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    code, out_dir = _train(tmp_path, data_dir)
    assert code == 0
    for name in ("model.json", "metrics.json", "curves.csv"):
        assert (out_dir / name).exists()
    doc = json.loads((out_dir / "model.json").read_text())
    assert doc["kind"] == "quantum"
    assert doc["num_qubits"] == 6
    assert len(doc["theta"]) == doc["num_params"]
    assert "val accuracy" in capsys.readouterr().out


def test_train_classical_model(tmp_path):
    data_dir = _synth(tmp_path)
    code, out_dir = _train(tmp_path, data_dir, extra=["--model", "classical"],
                           out_name="clf")
    assert code == 0
    doc = json.loads((out_dir / "model.json").read_text())
    assert doc["kind"] == "classical"
    assert doc["layer_widths"] == [32, 64, 64, 3]


def test_train_too_few_qubits_exits_2(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    code = main(["train", "--data", str(data_dir), "--out", str(tmp_path / "r"),
                 "--qubits", "4", "--group-size", "2"])
    assert code == 2
    assert "need at least 5 qubits" in capsys.readouterr().err


def test_train_rerun_is_byte_identical(tmp_path):
    data_dir = _synth(tmp_path)
    _, out_a = _train(tmp_path, data_dir, out_name="a")
    _, out_b = _train(tmp_path, data_dir, out_name="b")
    for name in ("model.json", "metrics.json", "curves.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_eval_matches_training_curves(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    _, out_dir = _train(tmp_path, data_dir)
    curves = (out_dir / "curves.csv").read_text().splitlines()
    last_val = [l for l in curves[1:] if l.split(",")[1] == "val"][-1].split(",")
    code = main(["eval", "--model-path", str(out_dir / "model.json"),
                 "--data", str(data_dir), "--split", "val",
                 "--out", str(tmp_path / "eval")])
    assert code == 0
    out = capsys.readouterr().out
    metrics = json.loads((tmp_path / "eval" / "metrics.json").read_text())
    assert metrics["loss"] == float(last_val[2])
    assert metrics["accuracy"] == float(last_val[3])
    assert metrics["auc"] == float(last_val[4])
    assert "accuracy" in out


def test_eval_corrupt_checkpoint_names_field(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "quantum", "theta": [0.0]}))
    code = main(["eval", "--model-path", str(bad), "--data", str(data_dir),
                 "--out", str(tmp_path / "e")])
    assert code == 2
    assert "num_qubits" in capsys.readouterr().err


def test_eval_mismatched_signal_length(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    _, out_dir = _train(tmp_path, data_dir)
    other = tmp_path / "other"
    assert main(["synth", "--classes", "3", "--len", "16", "--samples", "20",
                 "--seed", "1", "--out", str(other)]) == 0
    code = main(["eval", "--model-path", str(out_dir / "model.json"),
                 "--data", str(other), "--out", str(tmp_path / "e2")])
    assert code == 2
    assert "signal length" in capsys.readouterr().err


def test_predict_top_k(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    _, out_dir = _train(tmp_path, data_dir)
    code = main(["predict", "--model-path", str(out_dir / "model.json"),
                 "--data", str(data_dir), "--top", "2"])
    assert code == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("s0")]
    assert len(lines) == 60
    assert all(line.count("class") == 2 for line in lines)


def test_predict_csv_output(tmp_path):
    data_dir = _synth(tmp_path)
    _, out_dir = _train(tmp_path, data_dir)
    csv_path = tmp_path / "scores.csv"
    code = main(["predict", "--model-path", str(out_dir / "model.json"),
                 "--data", str(data_dir), "--csv", str(csv_path)])
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "id,p0,p1,p2"
    assert len(lines) == 61


def test_predict_empty_dataset_warns_and_exits_0(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    _, out_dir = _train(tmp_path, data_dir)
    empty = tmp_path / "empty"
    empty.mkdir()
    (empty / "dataset.csv").write_text("")
    code = main(["predict", "--model-path", str(out_dir / "model.json"),
                 "--data", str(empty)])
    assert code == 0
    assert "nothing to predict" in capsys.readouterr().err


def test_inspect_reports_counts(capsys):
    assert main(["inspect", "--qubits", "16", "--group-size", "4",
                 "--classes", "8"]) == 0
    out = capsys.readouterr().out
    assert "LQCG: 16 gates, 48 params" in out
    assert "GQCG: 4 gates, 12 params" in out
    assert "class states: 8 x 48 = 384 params" in out
    assert "total: 444 params" in out


def test_inspect_gate_listing_small(capsys):
    assert main(["inspect", "--qubits", "8", "--group-size", "4",
                 "--classes", "2"]) == 0
    out = capsys.readouterr().out
    assert "LQCG: 8 gates, 24 params" in out
    assert "GQCG: 2 gates, 6 params" in out
    assert "CU q3 -> q7" in out


def test_inspect_single_group_exits_2(capsys):
    assert main(["inspect", "--qubits", "4", "--group-size", "4",
                 "--classes", "2"]) == 2
    assert "two qubit groups" in capsys.readouterr().err


def test_numeric_failure_exits_3(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    _, out_dir = _train(tmp_path, data_dir)
    doc = json.loads((out_dir / "model.json").read_text())
    doc["theta"] = [float("inf")] * len(doc["theta"])
    bad = tmp_path / "inf.json"
    bad.write_text(json.dumps(doc))
    code = main(["eval", "--model-path", str(bad), "--data", str(data_dir),
                 "--out", str(tmp_path / "e3")])
    assert code == 3


def test_config_file_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"classes": 2, "samples": 10}))
    data_dir = tmp_path / "cfgdata"
    code = main(["synth", "--classes", "6", "--len", "32", "--samples", "99",
                 "--seed", "0", "--out", str(data_dir), "--config", str(cfg)])
    assert code == 0
    manifest = json.loads((data_dir / "manifest.json").read_text())
    assert manifest["num_classes"] == 2
    assert manifest["num_samples"] == 10


def test_lock_file_blocks_concurrent_use(tmp_path, capsys):
    out = tmp_path / "locked"
    out.mkdir()
    (out / ".lock").touch()
    code = main(SMALL_SYNTH + ["--out", str(out)])
    assert code == 2
    assert "lock" in capsys.readouterr().err


def test_compare_emits_table_and_both_runs(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    out = tmp_path / "cmp"
    code = main(["compare", "--data", str(data_dir), "--out", str(out)]
                + SMALL_TRAIN)
    assert code == 0
    for kind in ("quantum", "classical"):
        for name in ("model.json", "metrics.json", "curves.csv"):
            assert (out / kind / name).exists()
    table = capsys.readouterr().out
    assert "params" in table
    q_params = json.loads((out / "quantum/model.json").read_text())["num_params"]
    c_params = json.loads((out / "classical/model.json").read_text())["num_params"]
    assert str(q_params) in table and str(c_params) in table


def test_compare_reruns_bitwise_identical(tmp_path):
    data_dir = _synth(tmp_path)
    outs = []
    for name in ("c1", "c2"):
        out = tmp_path / name
        assert main(["compare", "--data", str(data_dir), "--out", str(out)]
                    + SMALL_TRAIN) == 0
        outs.append(out)
    for kind in ("quantum", "classical"):
        for name in ("model.json", "metrics.json", "curves.csv"):
            assert (outs[0] / kind / name).read_bytes() == \
                (outs[1] / kind / name).read_bytes()


def test_train_qubit_validation_matches_length_256(tmp_path, capsys):
    # signals of length 256 need 8 qubits; asking for 6 is a config error
    data_dir = tmp_path / "wide"
    assert main(["synth", "--classes", "2", "--len", "256", "--samples", "12",
                 "--seed", "3", "--out", str(data_dir)]) == 0
    code = main(["train", "--data", str(data_dir), "--out", str(tmp_path / "w"),
                 "--qubits", "6", "--group-size", "3"])
    assert code == 2
    assert "need at least 8 qubits" in capsys.readouterr().err


def test_eval_split_all(tmp_path, capsys):
    data_dir = _synth(tmp_path)
    _, out_dir = _train(tmp_path, data_dir)
    code = main(["eval", "--model-path", str(out_dir / "model.json"),
                 "--data", str(data_dir), "--split", "all",
                 "--out", str(tmp_path / "ea")])
    assert code == 0
    assert "samples 60" in capsys.readouterr().out
