import csv

import numpy as np
import pytest

from scnn import cli
from scnn.checkpoint import load_model
from scnn.data import Vocabulary
from scnn.synthetic import write_corpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    train = write_corpus(root / "train.csv", 1500, seed=0)
    test = write_corpus(root / "test.csv", 120, seed=1, neutral_fraction=0.25)
    return train, test


@pytest.fixture(scope="module")
def prepared(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("prep")
    assert cli.main(["prepare", "--train-csv", str(corpus[0]), "--test-csv", str(corpus[1]),
                     "--out-dir", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def trained(prepared, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert cli.main(["train", "--model", "scnn", "--data-dir", str(prepared), "--out-dir", str(out),
                     "--epochs", "2", "--subset", "700", "--seed", "1"]) == 0
    return out


def test_prepare_outputs(prepared):
    names = {p.name for p in prepared.iterdir()}
    for n in ("vocab.tsv", "train_ids.npy", "dev_labels.npy", "test_lengths.npy",
              "train_length_hist.csv", "test_label_counts.csv", "prepare.txt"):
        assert n in names
    summary = cli.read_manifest(prepared / "prepare.txt")
    assert int(summary["train"]) + int(summary["dev"]) == int(summary["rows"]) - int(summary["dropped_empty"])
    assert int(summary["dev"]) == round(int(summary["rows"]) * 0.1)
    assert Vocabulary.load(prepared / "vocab.tsv").checksum() == summary["vocab_sha256"]


def test_prepare_byte_identical(corpus, prepared, tmp_path):
    assert cli.main(["prepare", "--train-csv", str(corpus[0]), "--test-csv", str(corpus[1]),
                     "--out-dir", str(tmp_path)]) == 0
    for p in prepared.iterdir():
        assert (tmp_path / p.name).read_bytes() == p.read_bytes(), p.name


def test_train_outputs(trained):
    points = list(csv.DictReader(open(trained / "scnn_curve.csv")))
    assert [int(r["samples_seen"]) for r in points] == list(range(100, 1401, 100))
    metrics = list(csv.DictReader(open(trained / "scnn_metrics.csv")))
    assert [int(r["epoch"]) for r in metrics] == [1, 2]
    manifest = cli.read_manifest(trained / "scnn_manifest.txt")
    assert manifest["status"] == "done"
    assert manifest["train_samples"] == "700"
    assert load_model(trained / "scnn.scn").checksum() == manifest["param_checksum"]


def test_train_data_dir_from_env(prepared, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.DATA_DIR_ENV, str(prepared))
    assert cli.main(["train", "--model", "mlp", "--out-dir", str(tmp_path), "--epochs", "1",
                     "--subset", "64", "--dev-limit", "20"]) == 0
    assert (tmp_path / "mlp.scn").is_file()


def test_train_without_data_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv(cli.DATA_DIR_ENV, raising=False)
    assert cli.main(["train", "--model", "scnn", "--out-dir", str(tmp_path)]) == 1
    assert cli.DATA_DIR_ENV in capsys.readouterr().err


def test_eval(trained, prepared, corpus, tmp_path, capsys):
    out = tmp_path / "e.csv"
    assert cli.main(["eval", "--checkpoint", str(trained / "scnn.scn"), "--test-csv", str(corpus[1]),
                     "--data-dir", str(prepared), "--out", str(out)]) == 0
    (row,) = csv.DictReader(open(out))
    assert int(row["samples"]) == int(row["negative"]) + int(row["positive"])
    assert int(row["samples"]) == len(np.load(prepared / "test_labels.npy"))
    assert 0.5 < float(row["accuracy"]) <= 1.0


def test_eval_vocab_mismatch(trained, corpus, tmp_path, capsys):
    Vocabulary(["a"]).save(tmp_path / "vocab.tsv")
    assert cli.main(["eval", "--checkpoint", str(trained / "scnn.scn"), "--test-csv", str(corpus[1]),
                     "--data-dir", str(tmp_path)]) == 1
    assert "vocabulary has 3 entries" in capsys.readouterr().err


def test_params(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert cli.main(["params", "--all", "--out-csv", str(out)]) == 0
    text = capsys.readouterr().out
    assert "332" in text and "200,142" in text
    rows = {r["model"]: r for r in csv.DictReader(open(out))}
    assert rows["scnn"]["trunk_params"] == "332"
    assert rows["cnn"]["trunk_params"] == "200142"
    assert rows["mlp"]["note"]


def test_params_single(capsys):
    assert cli.main(["params", "--model", "cnn"]) == 0
    assert "scnn" not in capsys.readouterr().out


def test_swarm_viz(trained, prepared, tmp_path, capsys):
    sentences = tmp_path / "s.txt"
    sentences.write_text("i love it\n\nworst day ever\nok\n")
    out = tmp_path / "viz"
    assert cli.main(["swarm-viz", "--checkpoint", str(trained / "scnn.scn"), "--sentences-file",
                     str(sentences), "--out-dir", str(out), "--data-dir", str(prepared)]) == 0
    assert sorted(p.name for p in out.glob("heatmap_*.pgm")) == ["heatmap_00.pgm", "heatmap_01.pgm", "heatmap_02.pgm"]
    assert "3 tensors" in capsys.readouterr().out


def test_swarm_viz_rejects_other_models(prepared, tmp_path, capsys):
    cli.main(["train", "--model", "mlp", "--data-dir", str(prepared), "--out-dir", str(tmp_path),
              "--epochs", "1", "--subset", "32", "--dev-limit", "10"])
    (tmp_path / "s.txt").write_text("hello\n")
    assert cli.main(["swarm-viz", "--checkpoint", str(tmp_path / "mlp.scn"), "--sentences-file",
                     str(tmp_path / "s.txt"), "--out-dir", str(tmp_path / "v"), "--data-dir", str(prepared)]) == 1
    assert "SCNN" in capsys.readouterr().err


def test_unknown_model_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["train", "--model", "transformer"])
    assert exc.value.code == 2


def test_missing_train_csv(tmp_path, capsys):
    assert cli.main(["prepare", "--train-csv", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path)]) == 1
    assert "not found" in capsys.readouterr().err


def test_corrupt_checkpoint(prepared, corpus, tmp_path, capsys):
    (tmp_path / "bad.scn").write_bytes(b"nope")
    assert cli.main(["eval", "--checkpoint", str(tmp_path / "bad.scn"), "--test-csv", str(corpus[1]),
                     "--data-dir", str(prepared)]) == 1
    assert "magic" in capsys.readouterr().err
