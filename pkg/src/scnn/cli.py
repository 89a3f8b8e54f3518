"""Command-line entry point: ``scnn prepare | train | eval | params | swarm-viz``."""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import data as D
from .checkpoint import CheckpointError, load_model, save_checkpoint
from .models import VARIANTS, ConfigError, ModelConfig, build_model, count_params
from .tensor import Prng
from .training import TrainConfig, curve_csv, evaluate, metrics_csv, train
from .viz import dump_swarm_features

DATA_DIR_ENV = "SCNN_DATA_DIR"
REPORTED_COUNTS = {"scnn": 332, "mlp": 28_002, "cnn": 200_142, "bilstm": 738_307}
COUNT_NOTES = {
    "mlp": "14000*2+2 + 2*2+2 under a 2-unit hidden layer; reported 28,002 not reachable",
    "bilstm": "two-bias LSTM, 2 layers x 2 directions + dense; reported 738,307 not reachable",
}
VOCAB_FILE = "vocab.tsv"

log = logging.getLogger("scnn")


class CommandError(Exception):
    pass


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _check_outputs(paths) -> None:
    missing = [str(p) for p in paths if not Path(p).is_file() or Path(p).stat().st_size == 0]
    if missing:
        raise CommandError(f"expected outputs missing or empty: {', '.join(missing)}")


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CommandError(f"{what} not found: {p}")
    return p


def _data_dir(args) -> Path:
    d = args.data_dir or os.environ.get(DATA_DIR_ENV)
    if not d:
        raise CommandError(f"no data directory; pass --data-dir or set {DATA_DIR_ENV}")
    return Path(d)


def write_manifest(path, entries: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in entries.items()), encoding="utf-8")


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        k, _, v = line.partition("=")
        out[k] = v
    return out


# -- prepare ----------------------------------------------------------------

def cmd_prepare(args) -> int:
    train_csv = _require_file(args.train_csv, "training CSV")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    texts, labels = D.load_labeled(train_csv)
    corpus = D.prepare_corpus(texts, labels, seed=args.seed, capacity=args.vocab_size)
    vocab_path = out / VOCAB_FILE
    corpus.vocab.save(vocab_path)
    outputs = [vocab_path]
    outputs += corpus.train.save(out, "train")
    outputs += corpus.dev.save(out, "dev")

    all_lengths = np.concatenate([corpus.train.lengths, corpus.dev.lengths])
    all_labels = np.concatenate([corpus.train.labels, corpus.dev.labels])
    stats = D.dataset_stats(all_lengths, all_labels)
    (out / "train_length_hist.csv").write_text(stats.histogram_csv())
    (out / "train_label_counts.csv").write_text(stats.labels_csv())
    outputs += [out / "train_length_hist.csv", out / "train_label_counts.csv"]

    summary = {
        "train_csv": train_csv.name,
        "seed": args.seed,
        "rows": len(texts),
        "rows_negative": int((labels == 0).sum()),
        "rows_positive": int((labels == 1).sum()),
        "dropped_empty": corpus.dropped_empty,
        "train": len(corpus.train),
        "dev": len(corpus.dev),
        "vocab_size": len(corpus.vocab),
        "vocab_sha256": corpus.vocab.checksum(),
    }
    if args.test_csv:
        test_texts, test_labels = D.load_labeled(_require_file(args.test_csv, "test CSV"))
        test = D.encode_texts([D.clean_text(t) for t in test_texts], test_labels, corpus.vocab)
        outputs += test.save(out, "test")
        tstats = D.dataset_stats(test.lengths, test.labels)
        (out / "test_length_hist.csv").write_text(tstats.histogram_csv())
        (out / "test_label_counts.csv").write_text(tstats.labels_csv())
        outputs += [out / "test_length_hist.csv", out / "test_label_counts.csv"]
        summary["test"] = len(test)
    write_manifest(out / "prepare.txt", summary)
    outputs.append(out / "prepare.txt")
    _check_outputs(outputs)
    print(f"prepared {summary['train']} train / {summary['dev']} dev samples, "
          f"vocabulary {summary['vocab_size']} entries -> {out}")
    return 0


# -- train ------------------------------------------------------------------

def _subset(ds: D.Dataset, n: int | None, seed: int) -> D.Dataset:
    if n is None or n >= len(ds):
        return ds
    order = Prng(seed).spawn(3).permutation(len(ds))
    return ds.subset(order[:n])


def load_prepared(data_dir: Path):
    vocab = D.Vocabulary.load(_require_file(data_dir / VOCAB_FILE, "vocabulary"))
    return vocab, D.Dataset.load(data_dir, "train"), D.Dataset.load(data_dir, "dev")


def cmd_train(args) -> int:
    data_dir = _data_dir(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    vocab, train_set, dev_set = load_prepared(data_dir)
    train_set = _subset(train_set, args.subset, args.seed)
    if args.dev_limit is not None:
        dev_set = dev_set.subset(np.arange(min(args.dev_limit, len(dev_set))))

    mcfg = ModelConfig(args.model, vocab_size=len(vocab), swarm_relu=args.swarm_relu)
    tcfg = TrainConfig(batch_size=args.batch_size, learning_rate=args.lr, epochs=args.epochs,
                       seed=args.seed, optimizer=args.optimizer)
    paths = {
        "checkpoint": out / f"{args.model}.scn",
        "curve": out / f"{args.model}_curve.csv",
        "metrics": out / f"{args.model}_metrics.csv",
        "manifest": out / f"{args.model}_manifest.txt",
    }
    manifest = {"command": "train", "status": "running"}
    manifest.update({f"model.{k}": v for k, v in mcfg.to_dict().items()})
    manifest.update({f"train.{k}": v for k, v in vars(tcfg).items()})
    manifest.update({
        "seed": args.seed,
        "subset": args.subset,
        "train_samples": len(train_set),
        "dev_samples": len(dev_set),
        "data.train_ids_sha256": sha256_file(data_dir / "train_ids.npy"),
        "data.dev_ids_sha256": sha256_file(data_dir / "dev_ids.npy"),
        "vocab_sha256": vocab.checksum(),
    })
    manifest.update({f"output.{k}": str(v) for k, v in paths.items()})
    write_manifest(paths["manifest"], manifest)

    model = build_model(mcfg, seed=args.seed)
    t1 = time.perf_counter()
    result = train(model, train_set, dev_set, tcfg)
    t2 = time.perf_counter()

    save_checkpoint(model, paths["checkpoint"])
    paths["curve"].write_text(curve_csv(result.curve))
    paths["metrics"].write_text(metrics_csv(result.epochs))
    manifest.update({
        "status": "done",
        "best_epoch": result.best_epoch,
        "param_checksum": model.checksum(),
        "seconds.load": f"{t1 - t0:.3f}",
        "seconds.train": f"{t2 - t1:.3f}",
    })
    write_manifest(paths["manifest"], manifest)
    _check_outputs(paths.values())
    last = result.epochs[-1]
    print(f"{args.model}: {len(result.curve)} curve points, best epoch {result.best_epoch}, "
          f"last dev accuracy {last.dev_accuracy:.4f} -> {out}")
    return 0


# -- eval -------------------------------------------------------------------

def cmd_eval(args) -> int:
    model = load_model(_require_file(args.checkpoint, "checkpoint"))
    vocab = D.Vocabulary.load(_require_file(_data_dir(args) / VOCAB_FILE, "vocabulary"))
    if len(vocab) != model.config.vocab_size:
        raise CommandError(
            f"vocabulary has {len(vocab)} entries but the checkpoint expects {model.config.vocab_size}")
    texts, labels = D.load_labeled(_require_file(args.test_csv, "test CSV"))
    test = D.encode_texts([D.clean_text(t) for t in texts], labels, vocab, model.config.seq_len)
    acc, loss = evaluate(model, test)
    out = Path(args.out) if args.out else Path(args.checkpoint).with_suffix(".eval.csv")
    out.write_text(f"samples,negative,positive,accuracy,loss\n{len(test)},{int((test.labels == 0).sum())},"
                   f"{int((test.labels == 1).sum())},{acc!r},{loss!r}\n")
    _check_outputs([out])
    print(f"{model.config.variant}: accuracy {acc:.4f} ({len(test)} samples), loss {loss:.4f} -> {out}")
    return 0


# -- params -----------------------------------------------------------------

def param_table(variants) -> list[dict]:
    rows = []
    for v in variants:
        model = build_model(ModelConfig(v), seed=None)
        rows.append({
            "model": v,
            "trunk_params": count_params(model),
            "with_embedding": count_params(model, include_embedding=True),
            "reported": REPORTED_COUNTS[v],
            "note": COUNT_NOTES.get(v, ""),
        })
    return rows


def cmd_params(args) -> int:
    variants = VARIANTS if args.all or not args.model else [args.model]
    rows = param_table(variants)
    print(f"{'model':<8}{'trunk params':>14}{'with embedding':>16}{'reported':>10}")
    for r in rows:
        mark = "" if r["trunk_params"] == r["reported"] else " *"
        print(f"{r['model']:<8}{r['trunk_params']:>14,}{r['with_embedding']:>16,}{r['reported']:>10,}{mark}")
    for r in rows:
        if r["note"]:
            print(f"* {r['model']}: {r['note']}")
    if args.out_csv:
        lines = ["model,trunk_params,with_embedding,reported,note"]
        lines += [f"{r['model']},{r['trunk_params']},{r['with_embedding']},{r['reported']},\"{r['note']}\"" for r in rows]
        Path(args.out_csv).write_text("\n".join(lines) + "\n")
        _check_outputs([args.out_csv])
    return 0


# -- swarm-viz --------------------------------------------------------------

def cmd_swarm_viz(args) -> int:
    model = load_model(_require_file(args.checkpoint, "checkpoint"))
    if model.config.variant != "scnn":
        raise CommandError(f"swarm-viz needs an SCNN checkpoint, got {model.config.variant}")
    vocab = D.Vocabulary.load(_require_file(_data_dir(args) / VOCAB_FILE, "vocabulary"))
    sentences = [s.strip() for s in _require_file(args.sentences_file, "sentences file")
                 .read_text(encoding="utf-8").splitlines() if s.strip()]
    if not sentences:
        raise CommandError("sentences file is empty")
    res = dump_swarm_features(model, vocab, sentences, args.out_dir)
    _check_outputs([res["tensors"], res["cosine"], *res["heatmaps"]])
    off = np.abs(np.abs(res["cosines"]) - 1.0).max()
    print(f"{len(sentences)} tensors; max | |cos| - 1 | = {off:.3e} -> {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scnn", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prepare", help="clean, build vocabulary, encode, write stats")
    sp.add_argument("--train-csv", required=True)
    sp.add_argument("--test-csv")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--vocab-size", type=int, default=D.VOCAB_CAPACITY)
    sp.set_defaults(func=cmd_prepare)

    sp = sub.add_parser("train", help="train one architecture on prepared data")
    sp.add_argument("--model", required=True, choices=VARIANTS)
    sp.add_argument("--data-dir", help=f"prepared data (default: ${DATA_DIR_ENV})")
    sp.add_argument("--out-dir", default="runs")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epochs", type=int, default=10)
    sp.add_argument("--subset", type=int, help="train on the first N shuffled samples")
    sp.add_argument("--dev-limit", type=int, help="evaluate on the first N dev samples only")
    sp.add_argument("--batch-size", type=int, default=32)
    sp.add_argument("--lr", type=float, default=0.001)
    sp.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    sp.add_argument("--swarm-relu", action="store_true", help="ReLU after each swarm filter")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="accuracy on the manual test file")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--test-csv", required=True)
    sp.add_argument("--data-dir", help=f"prepared data holding the vocabulary (default: ${DATA_DIR_ENV})")
    sp.add_argument("--out", help="metrics CSV (default: next to the checkpoint)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("params", help="trunk parameter counts of the four models")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--model", choices=VARIANTS)
    g.add_argument("--all", action="store_true")
    sp.add_argument("--out-csv")
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("swarm-viz", help="dump last swarm filter outputs for sentences")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--sentences-file", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--data-dir", help=f"prepared data holding the vocabulary (default: ${DATA_DIR_ENV})")
    sp.set_defaults(func=cmd_swarm_viz)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CommandError, ConfigError, CheckpointError, D.DataError, OSError, ValueError) as exc:
        print(f"scnn {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
