import csv
import json

import numpy as np
import pytest

from qtlstm import checkpoint as ckpt
from qtlstm.cli import main, read_config

FAST = ["--epochs", "3", "--hidden-dim", "3", "--horizon-steps", "6", "--window", "10", "--lags", "1,2"]


@pytest.fixture(scope="module")
def series(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "series.csv"
    assert main(["synth-data", "--out", str(path), "--length", "500", "--seed", "1"]) == 0
    return path


@pytest.fixture(scope="module")
def trained(series, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    ck = out / "qt.json"
    assert main(["train", "--mode", "qt", "--data", str(series), "--checkpoint", str(ck), "--lr", "0.01", *FAST]) == 0
    return ck


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_synth_csv_dialect(series):
    text = series.read_text()
    assert text.endswith("\n") and "\r" not in text
    rows = read_rows(series)
    assert rows[0] == ["timestamp", "level_cm", "discharge_m3s", "rainfall_mm", "reservoir_fill_pct"]
    assert len(rows) == 501


def test_train_outputs(trained):
    curve = read_rows(str(trained).replace(".json", "_curve.csv"))
    assert curve[0] == ["epoch", "train_loss", "val_loss"]
    assert [r[0] for r in curve[1:]] == ["1", "2", "3"]
    data = json.loads(trained.read_text())
    assert data["format"] == "qtlstm-checkpoint" and data["mode"] == "qt"
    assert {"n_qubits", "n_block", "phi"} <= set(data["circuit"])
    assert {"layer_dims", "gamma"} <= set(data["mapping"])
    assert data["data"]["normalization"]["columns"] == data["data"]["feature_names"]


def test_zero_lr_constant_curve(series, tmp_path):
    ck = tmp_path / "c.json"
    assert main(["train", "--mode", "classical", "--data", str(series), "--checkpoint", str(ck), "--lr", "0", *FAST]) == 0
    rows = read_rows(tmp_path / "c_curve.csv")[1:]
    assert len({r[1] for r in rows}) == 1 and len({r[2] for r in rows}) == 1


def test_evaluate_deterministic(series, trained, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["evaluate", "--checkpoint", str(trained), "--data", str(series), "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    result = json.loads(a.read_text())
    w = result["warnings"]
    total = w["true_warning_pct"] + w["false_alert_pct"] + w["missed_warning_pct"] + w["correct_no_warning_pct"]
    assert abs(total - 100) < 1e-9
    assert result["regression"]["mse"] >= 0
    assert "MSE=" in capsys.readouterr().out


def test_predict(series, trained, tmp_path):
    out = tmp_path / "p.csv"
    assert main(["predict", "--checkpoint", str(trained), "--data", str(series), "--out", str(out), "--split", "all"]) == 0
    rows = read_rows(out)
    assert rows[0] == ["timestamp", "actual", "predicted"]
    ts = [int(r[0]) for r in rows[1:]]
    assert ts == sorted(ts)
    # actuals are cm-scale max-over-horizon levels
    assert max(float(r[1]) for r in rows[1:]) > 50


def test_compare(series, tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--data", str(series), "--out", str(out), "--outdir", str(tmp_path / "cmp"), *FAST]) == 0
    text = capsys.readouterr().out
    assert "classical: trainable=" in text and "qt: trainable=" in text
    rows = {r["mode"]: r for r in csv.DictReader(open(out))}
    assert int(rows["classical"]["trainable"]) == int(rows["classical"]["M"])
    assert (tmp_path / "cmp" / "qt.json").exists()


def test_config_file_and_env(series, tmp_path, monkeypatch):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        f"[qtlstm]\ndata = {series}\nepochs = 2\nhidden_dim = 3\nhorizon_steps = 6\nwindow = 10\nlags = 1,2\nlearning_rate = 0.005\n"
    )
    assert read_config(cfg)["lags"] == [1, 2]
    monkeypatch.setenv("QTLSTM_CONFIG", str(cfg))
    ck = tmp_path / "c.json"
    assert main(["train", "--mode", "classical", "--checkpoint", str(ck), "--epochs", "4"]) == 0
    rows = read_rows(tmp_path / "c_curve.csv")
    assert len(rows) == 1 + 4  # flag overrides the file
    assert ckpt.load(ck).data["window"] == 10


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["train", "--mode", "quantum", "--checkpoint", "x.json"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1


def test_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert main(["train", "--data", str(missing), "--checkpoint", str(tmp_path / "c.json")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_schema_error(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("timestamp,stage\n" + "".join(f"{k},{k}\n" for k in range(300)))
    assert main(["train", "--data", str(p), "--checkpoint", str(tmp_path / "c.json"), *FAST]) == 2


def test_divergence_exit_code(series, tmp_path):
    args = ["train", "--mode", "classical", "--data", str(series), "--checkpoint", str(tmp_path / "c.json"),
            "--optimizer", "sgd", "--lr", "1e200", *FAST]
    with np.errstate(all="ignore"):
        assert main(args) == 3


def test_config_inline_comments(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[qtlstm]\nmapping_width =   ; empty: 2N\noptimizer = sgd  # or adam\nlags = 2,4\n")
    assert read_config(cfg) == {"mapping_width": None, "optimizer": "sgd", "lags": [2, 4]}
