"""The four compared architectures, parameter counting, and prediction."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .layers import (
    BiLSTM,
    Conv2D,
    Dense,
    Embedding,
    Layer,
    MaxPool2D,
    ReLU,
    Reshape,
    SwarmFilter,
)
from .tensor import DTYPE, Prng, ShapeError, argmax

VARIANTS = ("scnn", "mlp", "cnn", "bilstm")


class ConfigError(ValueError):
    """Raised for inconsistent model configurations or mismatched checkpoints."""


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "scnn"
    vocab_size: int = 100_000
    embed_dim: int = 100
    seq_len: int = 140
    classes: int = 2
    # scnn
    filter_dims: tuple = (300, 10)
    swarm_relu: bool = False
    # mlp
    mlp_hidden: int = 2
    # cnn
    cnn_channels: int = 20
    cnn_kernel: tuple = (100, 100)
    cnn_pool: int = 20
    # bilstm
    lstm_layers: int = 2
    lstm_hidden: int = 128

    def __post_init__(self):
        object.__setattr__(self, "variant", self.variant.lower())
        object.__setattr__(self, "filter_dims", tuple(int(d) for d in self.filter_dims))
        object.__setattr__(self, "cnn_kernel", tuple(int(d) for d in self.cnn_kernel))
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        ints = {
            "vocab_size": self.vocab_size, "embed_dim": self.embed_dim, "seq_len": self.seq_len,
            "classes": self.classes, "mlp_hidden": self.mlp_hidden, "cnn_channels": self.cnn_channels,
            "cnn_pool": self.cnn_pool, "lstm_layers": self.lstm_layers, "lstm_hidden": self.lstm_hidden,
        }
        for key, value in ints.items():
            if int(value) < 1:
                raise ConfigError(f"{key} must be positive, got {value}")
        if not self.filter_dims or min(self.filter_dims) < 1:
            raise ConfigError(f"filter_dims must be non-empty and positive, got {self.filter_dims}")
        if len(self.cnn_kernel) != 2 or min(self.cnn_kernel) < 1:
            raise ConfigError(f"cnn_kernel must be two positive sizes, got {self.cnn_kernel}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filter_dims"] = list(self.filter_dims)
        d["cnn_kernel"] = list(self.cnn_kernel)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class Model:
    config: ModelConfig
    embedding: Embedding
    trunk: list = field(default_factory=list)
    classifier: Dense = None

    @property
    def layers(self) -> list:
        return [self.embedding, *self.trunk, self.classifier]

    def parameters(self) -> list:
        return [p for layer in self.layers for p in layer.params]

    def named_parameters(self) -> dict:
        return {p.name: p for p in self.parameters()}

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def forward(self, ids):
        """Logits for a ``(B, seq_len)`` id batch, plus the caches backward needs."""
        ids = np.asarray(ids)
        if ids.ndim != 2 or ids.shape[1] != self.config.seq_len:
            raise ValueError(f"expected ids of shape (batch, {self.config.seq_len}), got {ids.shape}")
        caches = []
        x = ids
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, dlogits, caches) -> None:
        g = dlogits
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            g = layer.backward(g, cache)

    def checksum(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for p in self.parameters():
            h.update(p.name.encode())
            h.update(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
        return h.hexdigest()


def _trunk_layers(cfg: ModelConfig, prng: Prng | None) -> tuple[list, int]:
    """Trunk layers and the width the classifier must accept."""
    def stream(tag):
        return None if prng is None else prng.spawn(tag)

    flat = cfg.seq_len * cfg.embed_dim
    if cfg.variant == "scnn":
        trunk = []
        for k, m in enumerate(cfg.filter_dims):
            trunk.append(SwarmFilter(m, stream(10 + k), name=f"swarm{k}"))
            if cfg.swarm_relu:
                trunk.append(ReLU())
        return trunk, cfg.filter_dims[-1]
    if cfg.variant == "mlp":
        return [Dense(flat, cfg.mlp_hidden, stream(10), name="hidden"), ReLU()], cfg.mlp_hidden
    if cfg.variant == "cnn":
        conv = Conv2D(cfg.cnn_channels, *cfg.cnn_kernel, prng=stream(10), name="conv")
        pool = MaxPool2D(cfg.cnn_pool)
        pooled = pool.output_shape(conv.output_shape((cfg.seq_len, cfg.embed_dim)))
        width = int(np.prod(pooled))
        return [Reshape(cfg.seq_len, cfg.embed_dim), conv, ReLU(), pool, Reshape(width)], width
    lstm = BiLSTM(cfg.embed_dim, cfg.lstm_hidden, cfg.lstm_layers, prng=stream(10), name="bilstm")
    return [Reshape(cfg.seq_len, cfg.embed_dim), lstm], 2 * cfg.lstm_hidden


def _check_chain(model: Model) -> None:
    shape = (model.config.seq_len,)
    prev = "input"
    for layer in model.layers:
        try:
            shape = layer.output_shape(shape)
        except ShapeError as exc:
            raise ConfigError(f"{prev} -> {type(layer).__name__}: {exc}") from None
        prev = type(layer).__name__
    if shape != (model.config.classes,):
        raise ConfigError(f"{prev} -> logits: produces {shape}, expected ({model.config.classes},)")


def build_model(config: ModelConfig, seed: int | None = 0) -> Model:
    """Assemble a model; ``seed=None`` gives all-zero parameters."""
    prng = None if seed is None else Prng(seed)
    emb = Embedding(config.vocab_size, config.embed_dim, None if prng is None else prng.spawn(1))
    try:
        trunk, width = _trunk_layers(config, prng)
    except ShapeError as exc:
        raise ConfigError(f"{config.variant} trunk: {exc}") from None
    clf = Dense(width, config.classes, None if prng is None else prng.spawn(99), name="classifier")
    model = Model(config, emb, trunk, clf)
    _check_chain(model)
    return model


def count_params(model: Model, include_embedding: bool = False) -> int:
    layers = model.layers if include_embedding else model.layers[1:]
    return sum(layer.param_count for layer in layers)


def predict(model: Model, ids):
    """Return ``(logits, class)`` for one sequence of ``seq_len`` ids."""
    ids = np.asarray(ids)
    if ids.ndim != 1 or ids.shape[0] != model.config.seq_len:
        raise ValueError(f"expected {model.config.seq_len} token ids, got shape {ids.shape}")
    logits, _ = model.forward(ids[None, :])
    return logits[0], int(argmax(logits[0]))


def predict_batch(model: Model, ids, batch_size: int = 256) -> np.ndarray:
    ids = np.asarray(ids)
    out = [model.forward(ids[i:i + batch_size])[0] for i in range(0, len(ids), batch_size)]
    return np.concatenate(out, axis=0) if out else np.zeros((0, model.config.classes))


def _require_scnn(model: Model) -> None:
    if model.config.variant != "scnn":
        raise ValueError(f"this operation needs an SCNN model, got {model.config.variant!r}")


def swarm_features(model: Model, ids) -> np.ndarray:
    """Pre-activation output of the last swarm filter for a ``(B, seq_len)`` batch."""
    _require_scnn(model)
    x, _ = model.embedding.forward(np.atleast_2d(ids))
    filters = [layer for layer in model.trunk if isinstance(layer, SwarmFilter)]
    for layer in model.trunk:
        if layer is filters[-1]:
            return layer.forward(x)[0]
        x, _ = layer.forward(x)
    raise AssertionError("unreachable")


def scnn_closed_form(model: Model, ids) -> np.ndarray:
    """SCNN logits computed from the collapsed algebra instead of the layer stack."""
    _require_scnn(model)
    ids = np.asarray(ids)
    emb = model.embedding.weight.data
    filters = [layer.s.data for layer in model.trunk if isinstance(layer, SwarmFilter)]
    c = emb[ids].mean()
    feat = None
    for k, s in enumerate(filters):
        feat = c * s
        if model.config.swarm_relu:
            feat = np.maximum(feat, 0.0)
        if k + 1 < len(filters):
            c = feat.mean()
    W, b = model.classifier.W.data, model.classifier.b.data
    return W @ feat + b


def zero_parameters(model: Model) -> None:
    for p in model.parameters():
        p.data = np.zeros(p.shape, dtype=DTYPE)


__all__ = [
    "VARIANTS", "ConfigError", "ModelConfig", "Model", "Layer", "build_model", "count_params",
    "predict", "predict_batch", "swarm_features", "scnn_closed_form", "zero_parameters",
]
