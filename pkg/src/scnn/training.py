"""Optimizers, the mini-batch training loop, learning-curve logging and evaluation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .models import Model
from .tensor import Prng, log_softmax, softmax_cross_entropy

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 0.001
    epochs: int = 10
    seed: int = 0
    optimizer: str = "adam"
    curve_interval: int = 100

    def __post_init__(self):
        for key in ("batch_size", "epochs", "curve_interval"):
            if getattr(self, key) < 1:
                raise ValueError(f"{key} must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params) -> None:
        for p in params:
            if p.has_grad:
                p.data -= self.lr * p.grad
                p.zero_grad()


class Adam:
    """Adam with bias correction; moment buffers keyed by parameter name.

    Updates run in place through per-parameter scratch buffers, which keeps
    the 10M-entry embedding table from allocating fresh temporaries each step.
    """

    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict = {}
        self.v: dict = {}
        self._scratch: dict = {}

    def step(self, params) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p in params:
            g = p.grad
            m = self.m.get(p.name)
            if m is None:
                m = self.m[p.name] = np.zeros_like(p.data)
                self.v[p.name] = np.zeros_like(p.data)
                self._scratch[p.name] = (np.empty_like(p.data), np.empty_like(p.data))
            elif m.shape != g.shape:
                raise ValueError(f"{p.name}: optimizer state {m.shape} does not match {g.shape}")
            v = self.v[p.name]
            a, b = self._scratch[p.name]
            m *= b1
            np.multiply(g, 1.0 - b1, out=a)
            m += a
            v *= b2
            np.multiply(g, g, out=a)
            a *= 1.0 - b2
            v += a
            np.divide(v, c2, out=a)
            np.sqrt(a, out=a)
            a += self.eps
            np.multiply(m, self.lr / c1, out=b)
            b /= a
            np.subtract(p.data, b, out=p.data)
            p.zero_grad()


def sgd_step(params, lr: float) -> None:
    SGD(lr).step(params)


def adam_step(params, state: Adam) -> None:
    state.step(params)


def make_optimizer(cfg: TrainConfig):
    return Adam(cfg.learning_rate) if cfg.optimizer == "adam" else SGD(cfg.learning_rate)


@dataclass(frozen=True)
class CurvePoint:
    samples_seen: int
    loss: float
    accuracy: float


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    dev_loss: float
    dev_accuracy: float


@dataclass
class TrainResult:
    model: Model
    curve: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    best_epoch: int = 0


class CurveLogger:
    """Running loss/accuracy over the last ``interval`` samples, emitted at each multiple of ``interval``."""

    def __init__(self, interval: int = 100):
        self.interval = interval
        self.samples_seen = 0
        self.points: list[CurvePoint] = []
        self._loss = np.zeros(0)
        self._correct = np.zeros(0)

    def update(self, losses: np.ndarray, correct: np.ndarray) -> None:
        k = self.interval
        self._loss = np.concatenate([self._loss, losses])
        self._correct = np.concatenate([self._correct, correct.astype(np.float64)])
        before = self.samples_seen
        self.samples_seen += len(losses)
        mark = (before // k + 1) * k
        while mark <= self.samples_seen:
            end = len(self._loss) - (self.samples_seen - mark)
            window = slice(end - k, end)
            self.points.append(CurvePoint(mark, float(self._loss[window].mean()), float(self._correct[window].mean())))
            mark += k
        self._loss = self._loss[-k:]
        self._correct = self._correct[-k:]


def _per_sample(logits, labels):
    lp = log_softmax(logits)
    losses = -lp[np.arange(len(labels)), labels]
    correct = np.argmax(logits, axis=1) == labels
    return losses, correct


def train_step(model: Model, ids, labels, optimizer):
    """One mini-batch update; returns per-sample ``(losses, correct)`` computed before the update."""
    logits, caches = model.forward(ids)
    loss, dlogits = softmax_cross_entropy(logits, labels)
    if not math.isfinite(loss):
        raise TrainingError(
            f"non-finite loss {loss}; try a smaller learning rate or check parameter initialization"
        )
    losses, correct = _per_sample(logits, labels)
    model.backward(dlogits, caches)
    optimizer.step(model.parameters())
    return losses, correct


def evaluate(model: Model, dataset: Dataset, batch_size: int = 512) -> tuple[float, float]:
    """Return ``(accuracy, mean loss)``; leaves parameters untouched."""
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    total_loss = 0.0
    correct = 0
    for s in range(0, n, batch_size):
        logits, _ = model.forward(dataset.ids[s:s + batch_size])
        losses, ok = _per_sample(logits, dataset.labels[s:s + batch_size])
        total_loss += float(losses.sum())
        correct += int(ok.sum())
    return correct / n, total_loss / n


def train(model: Model, train_set: Dataset, dev_set: Dataset | None, cfg: TrainConfig,
          on_epoch=None) -> TrainResult:
    """Mini-batch training with a seeded per-epoch shuffle.

    Parameters from the epoch with the best dev accuracy are restored at the
    end (the last epoch when no dev set is given).
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    optimizer = make_optimizer(cfg)
    curve = CurveLogger(cfg.curve_interval)
    result = TrainResult(model)
    best_acc, best_params = -1.0, None
    shuffler = Prng(cfg.seed).spawn(7)
    n, bs = len(train_set), cfg.batch_size

    for epoch in range(1, cfg.epochs + 1):
        order = shuffler.permutation(n)
        loss_sum = 0.0
        for s in range(0, n, bs):
            idx = order[s:s + bs]
            losses, correct = train_step(model, train_set.ids[idx], train_set.labels[idx], optimizer)
            loss_sum += float(losses.sum())
            curve.update(losses, correct)
        if dev_set is not None and len(dev_set):
            dev_acc, dev_loss = evaluate(model, dev_set)
        else:
            dev_acc, dev_loss = float("nan"), float("nan")
        metrics = EpochMetrics(epoch, loss_sum / n, dev_loss, dev_acc)
        result.epochs.append(metrics)
        log.info("epoch %d: train_loss=%.4f dev_loss=%.4f dev_acc=%.4f", epoch, *
                 (metrics.train_loss, dev_loss, dev_acc))
        score = dev_acc if not math.isnan(dev_acc) else float(epoch)
        if score > best_acc:
            best_acc = score
            best_params = [p.data.copy() for p in model.parameters()]
            result.best_epoch = epoch
        if on_epoch is not None:
            on_epoch(metrics)

    for p, saved in zip(model.parameters(), best_params):
        p.data = saved
    result.curve = curve.points
    return result


def _fmt(x: float) -> str:
    return repr(float(x))


def curve_csv(points) -> str:
    rows = ["samples_seen,loss,accuracy"]
    rows += [f"{p.samples_seen},{_fmt(p.loss)},{_fmt(p.accuracy)}" for p in points]
    return "\n".join(rows) + "\n"


def metrics_csv(epochs) -> str:
    rows = ["epoch,train_loss,dev_loss,dev_accuracy"]
    rows += [f"{m.epoch},{_fmt(m.train_loss)},{_fmt(m.dev_loss)},{_fmt(m.dev_accuracy)}" for m in epochs]
    return "\n".join(rows) + "\n"


def read_curve_csv(path) -> list[CurvePoint]:
    import csv

    with open(path, newline="") as fh:
        return [CurvePoint(int(r["samples_seen"]), float(r["loss"]), float(r["accuracy"])) for r in csv.DictReader(fh)]
