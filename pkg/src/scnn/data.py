"""Sentiment140 ingestion, text cleaning, vocabulary and fixed-length encoding."""

from __future__ import annotations

import csv
import hashlib
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .tensor import Prng

log = logging.getLogger(__name__)

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"
VOCAB_CAPACITY = 100_000
SEQ_LEN = 140
MAX_MALFORMED_FRACTION = 0.001

TRAIN_FILE = "training.1600000.processed.noemoticon.csv"
TEST_FILE = "testdata.manual.2009.06.14.csv"

_URL = re.compile(r"(?:https?://|www\.)\S*")
_MENTION = re.compile(r"@\w+")
_WHITESPACE = re.compile(r"\s")
_DISALLOWED = re.compile(r"[^a-z0-9' ]")


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class RawTweet:
    polarity: int
    text: str


def parse_sentiment140(path, max_malformed_fraction: float = MAX_MALFORMED_FRACTION) -> Iterator[RawTweet]:
    """Yield every well-formed row of a Sentiment140 CSV file.

    Rows with the wrong field count or a polarity outside {0, 2, 4} are
    skipped and counted.  If more than ``max_malformed_fraction`` of rows were
    malformed, :class:`DataError` is raised once the file is exhausted.
    """
    total = bad = 0
    # The published files are Latin-1; decoding that way never fails.
    with open(path, encoding="latin-1", newline="") as fh:
        for row in csv.reader(fh):
            total += 1
            try:
                if len(row) != 6:
                    raise ValueError(f"{len(row)} fields")
                polarity = int(row[0])
                if polarity not in (0, 2, 4):
                    raise ValueError(f"polarity {polarity}")
            except ValueError as exc:
                bad += 1
                log.warning("%s: skipping malformed row %d (%s)", path, total, exc)
                continue
            yield RawTweet(polarity, row[5])
    if bad:
        log.warning("%s: skipped %d of %d rows", path, bad, total)
    if total and bad > max_malformed_fraction * total:
        raise DataError(f"{path}: {bad} of {total} rows malformed, above the {max_malformed_fraction:.2%} limit")


def polarity_label(polarity: int) -> int | None:
    """Map corpus polarity to a class: 0 -> 0 (negative), 4 -> 1 (positive), 2 -> None."""
    return {0: 0, 4: 1}.get(polarity)


def load_labeled(path) -> tuple[list[str], np.ndarray]:
    """Texts and binary labels from a Sentiment140 file, neutral rows dropped."""
    texts, labels = [], []
    for tweet in parse_sentiment140(path):
        label = polarity_label(tweet.polarity)
        if label is not None:
            texts.append(tweet.text)
            labels.append(label)
    return texts, np.asarray(labels, dtype=np.int64)


def clean_text(text: str) -> str:
    """Lowercase, drop URLs and @mentions, keep hashtag words, keep only [a-z0-9' ]."""
    text = text.lower()
    text = _URL.sub(" ", text)
    text = _MENTION.sub(" ", text)
    text = text.replace("#", "")
    text = _WHITESPACE.sub(" ", text)
    text = _DISALLOWED.sub("", text)
    return " ".join(text.split())


def tokenize(clean: str) -> list[str]:
    return clean.split()


class Vocabulary:
    """Token to id map with PAD at 0 and UNK at 1."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos = [PAD_TOKEN, UNK_TOKEN]
        self.stoi = {PAD_TOKEN: PAD, UNK_TOKEN: UNK}
        for tok in tokens:
            if tok in self.stoi:
                raise ValueError(f"duplicate token {tok!r}")
            self.stoi[tok] = len(self.itos)
            self.itos.append(tok)

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def lookup(self, token: str) -> int:
        return self.stoi.get(token, UNK)

    def to_text(self) -> str:
        return "".join(f"{tok}\t{i}\n" for i, tok in enumerate(self.itos))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        vocab = cls()
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        for expected, line in enumerate(lines):
            tok, _, idx = line.rpartition("\t")
            if int(idx) != expected:
                raise DataError(f"{path}: line {expected + 1} has id {idx}, expected {expected}")
            if expected < 2:
                if tok != vocab.itos[expected]:
                    raise DataError(f"{path}: reserved id {expected} must be {vocab.itos[expected]!r}")
                continue
            vocab.stoi[tok] = expected
            vocab.itos.append(tok)
        return vocab

    def checksum(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()


def build_vocab(token_streams: Iterable[Iterable[str]], capacity: int = VOCAB_CAPACITY) -> Vocabulary:
    """Keep the ``capacity - 2`` most frequent tokens; ties go to the lexicographically smaller."""
    counts = Counter()
    for tokens in token_streams:
        counts.update(tokens)
    if not counts:
        raise DataError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(tok for tok, _ in ranked[: capacity - 2])


def encode(tokens: list[str], vocab: Vocabulary, seq_len: int = SEQ_LEN) -> np.ndarray:
    """Token ids truncated to ``seq_len`` and right-padded with PAD."""
    ids = np.full(seq_len, PAD, dtype=np.int32)
    kept = tokens[:seq_len]
    ids[: len(kept)] = [vocab.lookup(t) for t in kept]
    return ids


@dataclass
class Dataset:
    """Encoded samples: ``ids`` (N, seq_len), ``labels`` (N,), token ``lengths`` before padding."""

    ids: np.ndarray
    labels: np.ndarray
    lengths: np.ndarray

    def __len__(self):
        return len(self.labels)

    def subset(self, index) -> "Dataset":
        return Dataset(self.ids[index], self.labels[index], self.lengths[index])

    def save(self, directory, prefix: str) -> list[Path]:
        directory = Path(directory)
        paths = []
        for key in ("ids", "labels", "lengths"):
            p = directory / f"{prefix}_{key}.npy"
            np.save(p, getattr(self, key), allow_pickle=False)
            paths.append(p)
        return paths

    @classmethod
    def load(cls, directory, prefix: str) -> "Dataset":
        directory = Path(directory)
        arrays = [np.load(directory / f"{prefix}_{key}.npy", allow_pickle=False) for key in ("ids", "labels", "lengths")]
        return cls(*arrays)


def encode_texts(clean_texts: list[str], labels, vocab: Vocabulary, seq_len: int = SEQ_LEN) -> Dataset:
    ids = np.empty((len(clean_texts), seq_len), dtype=np.int32)
    lengths = np.empty(len(clean_texts), dtype=np.int32)
    for k, text in enumerate(clean_texts):
        tokens = tokenize(text)
        ids[k] = encode(tokens, vocab, seq_len)
        lengths[k] = len(tokens)
    return Dataset(ids, np.asarray(labels, dtype=np.int64), lengths)


def split_train_dev(n: int, seed: int, dev_fraction: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle of ``range(n)`` split into (train, dev) index arrays."""
    order = Prng(seed).permutation(n)
    n_dev = int(round(n * dev_fraction))
    return np.sort(order[n_dev:]), np.sort(order[:n_dev])


@dataclass
class DatasetStats:
    length_histogram: dict = field(default_factory=dict)
    label_counts: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.length_histogram.values())

    def histogram_csv(self) -> str:
        rows = ["length,count"] + [f"{k},{v}" for k, v in sorted(self.length_histogram.items())]
        return "\n".join(rows) + "\n"

    def labels_csv(self) -> str:
        rows = ["label,count"] + [f"{k},{v}" for k, v in sorted(self.label_counts.items())]
        return "\n".join(rows) + "\n"


def dataset_stats(lengths, labels=None) -> DatasetStats:
    lengths = np.asarray(lengths)
    values, counts = np.unique(lengths, return_counts=True)
    stats = DatasetStats({int(v): int(c) for v, c in zip(values, counts)})
    if labels is not None:
        lv, lc = np.unique(np.asarray(labels), return_counts=True)
        stats.label_counts = {int(v): int(c) for v, c in zip(lv, lc)}
    return stats


@dataclass
class PreparedCorpus:
    vocab: Vocabulary
    train: Dataset
    dev: Dataset
    dropped_empty: int


def prepare_corpus(texts: list[str], labels, seed: int, capacity: int = VOCAB_CAPACITY,
                   seq_len: int = SEQ_LEN) -> PreparedCorpus:
    """Clean, drop empty samples, split, build the vocabulary on train only, encode."""
    labels = np.asarray(labels)
    cleaned = [clean_text(t) for t in texts]
    keep = [k for k, c in enumerate(cleaned) if c]
    dropped = len(cleaned) - len(keep)
    if dropped:
        log.info("dropped %d samples that were empty after cleaning", dropped)
    cleaned = [cleaned[k] for k in keep]
    labels = labels[keep]
    train_idx, dev_idx = split_train_dev(len(cleaned), seed)
    vocab = build_vocab((tokenize(cleaned[k]) for k in train_idx), capacity)
    train = encode_texts([cleaned[k] for k in train_idx], labels[train_idx], vocab, seq_len)
    dev = encode_texts([cleaned[k] for k in dev_idx], labels[dev_idx], vocab, seq_len)
    return PreparedCorpus(vocab, train, dev, dropped)
