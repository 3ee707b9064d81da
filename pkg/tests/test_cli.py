"""End-to-end CLI behavior: subcommands, precedence, manifests, errors."""

import json
import os

import numpy as np
import pytest

from nbrecon.cli import main
from nbrecon.graphstore import load_graph


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture()
def house_data(tmp_path, capsys):
    data = tmp_path / "data"
    code, out, _ = _run(capsys, "gen", "--shape", "house", "--count", "10", "--cycle", "40", "--out", str(data))
    assert code == 0
    return data


def test_gen_house_dataset(house_data, capsys):
    g = load_graph(
        str(house_data / "edges.txt"),
        feature_path=str(house_data / "features.csv"),
        label_path=str(house_data / "labels.csv"),
    )
    assert g.num_nodes == 90
    assert len(g.edges) == 110
    assert len(set(g.labels.tolist())) == 5
    manifest = json.loads((house_data / "gen.manifest.json").read_text())
    assert manifest["command"] == "gen"
    assert manifest["config"]["cycle_len"] == 40


def test_gen_prints_counts(tmp_path, capsys):
    code, out, _ = _run(capsys, "gen", "--shape", "varied", "--count", "3", "--cycle", "15", "--out", str(tmp_path / "v"))
    assert code == 0
    assert "nodes=" in out and "edges=" in out and "roles=" in out


def test_gen_invalid_shape_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--shape", "pyramid", "--count", "1", "--cycle", "5", "--out", str(tmp_path)])
    assert exc.value.code == 2


def _train(capsys, data, out, *extra):
    return _run(
        capsys, "train", "--data", str(data), "--out", str(out),
        "--epochs", "3", "--m", "6", "--k", "2", "--q", "3", *extra,
    )


def test_train_writes_checkpoint_log_manifest(house_data, tmp_path, capsys):
    run = tmp_path / "run"
    code, out, _ = _train(capsys, house_data, run)
    assert code == 0
    assert (run / "checkpoint.bin").exists()
    lines = (run / "epochs.jsonl").read_text().strip().splitlines()
    assert len(lines) == 3
    rec = json.loads(lines[-1])
    assert set(rec) == {"epoch", "total", "self_loss", "degree_loss", "dist_losses"}
    manifest = json.loads((run / "train.manifest.json").read_text())
    assert set(manifest["input_hashes"]) == {
        str(house_data / "edges.txt"),
        str(house_data / "features.csv"),
        str(house_data / "labels.csv"),
    }


def test_train_rerun_byte_identical(house_data, tmp_path, capsys):
    run = tmp_path / "run"
    _train(capsys, house_data, run)
    first = {n: (run / n).read_bytes() for n in ("checkpoint.bin", "epochs.jsonl", "train.manifest.json")}
    _train(capsys, house_data, run)
    for n, blob in first.items():
        assert (run / n).read_bytes() == blob


def test_train_ablate_flag_zeroes_degree(house_data, tmp_path, capsys):
    run = tmp_path / "ab"
    code, _, _ = _train(capsys, house_data, run, "--ablate", "no-degree")
    assert code == 0
    for line in (run / "epochs.jsonl").read_text().strip().splitlines():
        assert json.loads(line)["degree_loss"] == 0.0


def test_train_config_precedence(house_data, tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"epochs": 2, "q": 4, "lam_s": 0.5}))
    run = tmp_path / "prec"
    code, _, _ = _run(
        capsys, "train", "--data", str(house_data), "--out", str(run),
        "--config", str(cfg_path), "--q", "5", "--m", "6", "--k", "1",
    )
    assert code == 0
    manifest = json.loads((run / "train.manifest.json").read_text())
    assert manifest["config"]["q"] == 5  # flag beats config file
    assert manifest["config"]["epochs"] == 2  # config file beats default
    assert manifest["config"]["lam_s"] == 0.5
    assert manifest["config"]["m"] == 6


def test_train_unknown_config_key_rejected(house_data, tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"learning_rate": 0.1}))
    code, _, err = _run(
        capsys, "train", "--data", str(house_data), "--out", str(tmp_path / "x"),
        "--config", str(cfg_path),
    )
    assert code == 1
    assert "nbrecon: E_CONTRACT:" in err


def test_embed_roundtrip_and_rerun(house_data, tmp_path, capsys):
    run = tmp_path / "run"
    _train(capsys, house_data, run)
    emb_path = tmp_path / "emb.csv"
    code, out, _ = _run(capsys, "embed", "--checkpoint", str(run / "checkpoint.bin"), "--data", str(house_data), "--out", str(emb_path))
    assert code == 0
    emb = np.loadtxt(emb_path, delimiter=",")
    assert emb.shape == (90, 6)
    first = emb_path.read_bytes()
    _run(capsys, "embed", "--checkpoint", str(run / "checkpoint.bin"), "--data", str(house_data), "--out", str(emb_path))
    assert emb_path.read_bytes() == first
    assert (tmp_path / "emb.csv.manifest.json").exists()


def test_embed_missing_checkpoint(house_data, tmp_path, capsys):
    code, _, err = _run(capsys, "embed", "--checkpoint", str(tmp_path / "nope.bin"), "--data", str(house_data), "--out", str(tmp_path / "e.csv"))
    assert code == 1
    assert "nbrecon: E_IO:" in err


def test_eval_cluster_mode_perfect_embedding(tmp_path, capsys):
    labels = np.array([0, 0, 1, 1, 2, 2])
    emb = np.eye(3)[labels] * 4.0
    emb_path = tmp_path / "e.csv"
    lab_path = tmp_path / "l.csv"
    np.savetxt(emb_path, emb, delimiter=",", fmt="%.17g")
    lab_path.write_text("".join(f"{v}\n" for v in labels))
    code, out, _ = _run(capsys, "eval", "--emb", str(emb_path), "--labels", str(lab_path), "--mode", "cluster")
    assert code == 0
    report = json.loads(out)
    assert report["homogeneity"] == 1.0
    assert report["completeness"] == 1.0


def test_eval_classify_averages_over_seeds(tmp_path, capsys):
    rng = np.random.default_rng(0)
    emb = np.vstack([rng.normal(-3, 0.3, (30, 3)), rng.normal(3, 0.3, (30, 3))])
    labels = np.array([0] * 30 + [1] * 30)
    emb_path = tmp_path / "e.csv"
    lab_path = tmp_path / "l.csv"
    np.savetxt(emb_path, emb, delimiter=",", fmt="%.17g")
    lab_path.write_text("".join(f"{v}\n" for v in labels))
    out_path = tmp_path / "metrics.json"
    code, _, _ = _run(
        capsys, "eval", "--emb", str(emb_path), "--labels", str(lab_path),
        "--mode", "classify", "--seeds", "3", "--out", str(out_path),
    )
    assert code == 0
    report = json.loads(out_path.read_text())
    assert len(report["per_seed_accuracy"]) == 3
    assert report["mean_accuracy"] >= 0.9
    assert (tmp_path / "metrics.json.manifest.json").exists()


def test_eval_malformed_csv_reports_row(tmp_path, capsys):
    emb_path = tmp_path / "e.csv"
    emb_path.write_text("1.0,2.0\n3.0,oops\n")
    lab_path = tmp_path / "l.csv"
    lab_path.write_text("0\n1\n")
    code, _, err = _run(capsys, "eval", "--emb", str(emb_path), "--labels", str(lab_path))
    assert code == 1
    assert "nbrecon: E_PARSE:" in err
    assert ":2:" in err  # names the offending row


def test_diagnose_quantiles_monotone(house_data, tmp_path, capsys):
    run = tmp_path / "run"
    _train(capsys, house_data, run)
    code, out, _ = _run(capsys, "diagnose", "--checkpoint", str(run / "checkpoint.bin"), "--data", str(house_data), "--q", "5")
    assert code == 0
    table = json.loads(out)
    assert table["q"] == 5
    vals = [table["quantiles"][str(p)] for p in (5, 25, 50, 75, 95)]
    assert vals == sorted(vals)
    assert all(np.isfinite(v) for v in vals)


def test_gen_rerun_byte_identical(tmp_path, capsys):
    a = tmp_path / "a"
    _run(capsys, "gen", "--shape", "fan", "--count", "3", "--cycle", "12", "--size", "5", "--perturb", "4", "--seed", "9", "--out", str(a))
    first = {n: (a / n).read_bytes() for n in ("edges.txt", "features.csv", "labels.csv", "gen.manifest.json")}
    _run(capsys, "gen", "--shape", "fan", "--count", "3", "--cycle", "12", "--size", "5", "--perturb", "4", "--seed", "9", "--out", str(a))
    for n, blob in first.items():
        assert (a / n).read_bytes() == blob
