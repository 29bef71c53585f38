import json
import os

import numpy as np
import pytest

from crashwatch.cli import main
from crashwatch.experiment import load_config
from crashwatch.experiment.runner import load_raw
from crashwatch.labeling import LabelSeries, var_threshold
from crashwatch.market_data import FeaturePanel


def _small_config(fixture_copy):
    path = fixture_copy / "experiment.json"
    doc = json.loads(path.read_text())
    doc["models"] = {"forest": doc["models"]["forest"], "boost": doc["models"]["boost"]}
    doc["repetitions"] = 2
    path.write_text(json.dumps(doc))
    return str(path)


def _status(capsys):
    out, err = capsys.readouterr()
    return out, json.loads(err.strip().splitlines()[-1])


def test_usage_errors(capsys):
    assert main([]) == 1
    out, st = _status(capsys)
    assert "usage" in out and st["ok"] is False and st["exit_code"] == 1
    assert main(["label", "--alpha", "0.05"]) == 1
    assert main(["evaluate", "--config", "missing.json", "--model", "x"]) == 1


def test_label_matches_var_threshold(fixture_copy, tmp_path, capsys):
    csv_path = str(fixture_copy / "SYN.csv")
    out = str(tmp_path / "labels.csv")
    assert main(["label", "--in", csv_path, "--alpha", "0.05", "--out", out]) == 0
    _, st = _status(capsys)
    lab = LabelSeries.from_csv(open(out).read())
    assert st["threshold"] == var_threshold(lab.returns, 0.05)
    assert st["crashes"] == int((lab.returns < st["threshold"]).sum())


def test_stage_chain_matches_run(fixture_copy, tmp_path, capsys):
    cfg_path = _small_config(fixture_copy)
    out_dir = str(tmp_path / "run")
    assert main(["run", "--config", cfg_path, "--out", out_dir]) == 0
    _, st = _status(capsys)
    raw = load_raw(os.path.join(out_dir, "results_raw.csv"))
    assert len(raw) == 2 * 2 == st["rows"]

    feats, rets, labels, wins = (str(tmp_path / n) for n in ("f.csv", "ingest", "l.csv", "w.bin"))
    assert main(["ingest", "--config", cfg_path, "--out", rets]) == 0
    assert main(["features", "--config", cfg_path, "--out", feats]) == 0
    assert main(["label", "--config", cfg_path, "--in", os.path.join(rets, "synthland_returns.csv"),
                 "--out", labels]) == 0
    assert main(["windows", "--config", cfg_path, "--in", feats, labels, "--out", wins]) == 0
    capsys.readouterr()

    ckpt = str(tmp_path / "boost.json")
    assert main(["train", "--config", cfg_path, "--in", wins, "--model", "boost", "--out", ckpt]) == 0
    ran = os.path.join(out_dir, "checkpoints", "synthland_0.05_boost_smote_enn.json")
    assert open(ckpt, "rb").read() == open(ran, "rb").read()

    capsys.readouterr()
    assert main(["evaluate", "--config", cfg_path, "--in", wins, "--model", ckpt]) == 0
    _, st = _status(capsys)
    row0 = next(r for r in raw if r["model"] == "boost" and r["run"] == "0")
    assert repr(st["metrics"]["bal_acc"]) == row0["bal_acc"]

    stem = str(tmp_path / "plot")
    assert main(["plot", "--config", cfg_path, "--in", wins, "--model", ckpt, "--out", stem]) == 0
    _, st = _status(capsys)
    assert st["rows"] == int(row0["tp"]) + int(row0["fp"]) + int(row0["fn"]) + int(row0["tn"])
    assert os.path.exists(stem + ".svg")

    res = str(tmp_path / "r.bin")
    assert main(["resample", "--config", cfg_path, "--in", wins, "--out", res, "--seed", "3"]) == 0
    _, st = _status(capsys)
    assert os.path.exists(str(tmp_path / "r.audit.csv")) and st["synthetic"] > 0

    gs = str(tmp_path / "gs.json")
    assert main(["gridsearch", "--config", cfg_path, "--in", wins, "--model", "forest", "--out", gs]) == 0
    assert json.load(open(gs))["skipped"] is True


def test_features_file_shape(fixture_copy, tmp_path, capsys):
    cfg_path = str(fixture_copy / "experiment.json")
    out = str(tmp_path / "f.csv")
    assert main(["features", "--config", cfg_path, "--out", out]) == 0
    _, st = _status(capsys)
    p = FeaturePanel.from_csv(open(out).read())
    assert p.shape == (st["rows"], st["predictors"]) and not np.isnan(p.values).any()


def test_seed_env_precedence(fixture_copy, tmp_path, capsys, monkeypatch):
    cfg_path = _small_config(fixture_copy)
    feats, labels, wins = (str(tmp_path / n) for n in ("f.csv", "l.csv", "w.bin"))
    main(["features", "--config", cfg_path, "--out", feats])
    main(["label", "--in", str(fixture_copy / "SYN.csv"), "--alpha", "0.05", "--out", labels])
    main(["windows", "--in", feats, labels, "--out", wins])
    capsys.readouterr()
    monkeypatch.setenv("CRASHWATCH_SEED", "5")
    a, b = str(tmp_path / "a.bin"), str(tmp_path / "b.bin")
    main(["resample", "--in", wins, "--out", a])
    main(["resample", "--in", wins, "--out", b, "--seed", "5"])
    assert open(a, "rb").read() == open(b, "rb").read()
