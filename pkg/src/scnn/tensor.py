"""Dense float64 tensors, a seeded generator, and the small kernels layers use.

Values are plain ``numpy.ndarray`` objects in float64.  :class:`Tensor` is the
named, trainable container: it pairs a data array with a lazily allocated
gradient buffer of the same shape.
"""

from __future__ import annotations

import numpy as np

DTYPE = np.float64


class ShapeError(ValueError):
    """Raised when operand shapes do not agree."""


class Tensor:
    """A named float64 array with an optional gradient buffer."""

    __slots__ = ("name", "_data", "_grad")

    def __init__(self, data, name: str = ""):
        arr = np.array(data, dtype=DTYPE, order="C")
        if arr.ndim == 0 or any(d < 1 for d in arr.shape):
            raise ShapeError(f"tensor {name!r} needs positive dimensions, got {arr.shape}")
        self.name = name
        self._data = arr
        self._grad = None

    @classmethod
    def zeros(cls, shape, name: str = "") -> "Tensor":
        return cls(np.zeros(shape, dtype=DTYPE), name)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @data.setter
    def data(self, value) -> None:
        value = np.asarray(value, dtype=DTYPE)
        if value.shape != self._data.shape:
            raise ShapeError(f"{self.name}: cannot assign {value.shape} into {self._data.shape}")
        self._data[...] = value

    @property
    def shape(self) -> tuple:
        return self._data.shape

    @property
    def size(self) -> int:
        return self._data.size

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            self._grad = np.zeros_like(self._data)
        return self._grad

    @grad.setter
    def grad(self, value) -> None:
        # Reached by in-place updates such as ``p.grad += g``.
        value = np.asarray(value, dtype=DTYPE)
        if value.shape != self._data.shape:
            raise ShapeError(f"{self.name}: gradient {value.shape} does not match {self._data.shape}")
        if self._grad is None:
            self._grad = np.zeros_like(self._data)
        if value is not self._grad:
            self._grad[...] = value

    @property
    def has_grad(self) -> bool:
        return self._grad is not None

    def zero_grad(self) -> None:
        if self._grad is not None:
            self._grad.fill(0.0)

    def reshape(self, *shape) -> "Tensor":
        """Return a tensor viewing the same data under a new shape."""
        view = Tensor.__new__(Tensor)
        view.name = self.name
        view._data = self._data.reshape(*shape)
        if view._data.size != self._data.size:
            raise ShapeError("reshape must preserve element count")
        view._grad = None if self._grad is None else self._grad.reshape(*shape)
        return view

    def __repr__(self) -> str:
        return f"Tensor(name={self.name!r}, shape={self.shape})"


class Prng:
    """Seeded generator with a platform-independent stream.

    Backed by numpy's PCG64 bit generator, whose output for a given seed is
    fixed across platforms and releases.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(size=shape)

    def integers(self, low: int, high: int, shape=None) -> np.ndarray:
        return self._gen.integers(low, high, size=shape)

    def spawn(self, tag: int) -> "Prng":
        """Derive an independent child stream keyed by ``tag``."""
        return Prng((self.seed * 0x9E3779B97F4A7C15 + tag) % 2**63)


def _as_array(t) -> np.ndarray:
    if isinstance(t, Tensor):
        return t.data
    return np.asarray(t, dtype=DTYPE)


def _require_rank(arr: np.ndarray, rank: int, what: str) -> None:
    if arr.ndim != rank:
        raise ShapeError(f"{what} must have rank {rank}, got shape {arr.shape}")


def outer(x, s) -> np.ndarray:
    """Outer product ``result[i, j] = x[i] * s[j]`` of two rank-1 operands."""
    x, s = _as_array(x), _as_array(s)
    _require_rank(x, 1, "x")
    _require_rank(s, 1, "s")
    if x.size == 0 or s.size == 0:
        raise ShapeError("outer operands must be non-empty")
    return x[:, None] * s[None, :]


def column_mean(t) -> np.ndarray:
    """Mean over rows, accumulated in ascending row order."""
    t = _as_array(t)
    _require_rank(t, 2, "column_mean input")
    acc = t[0].copy()
    for row in t[1:]:
        acc += row
    return acc / t.shape[0]


def matvec(w, x) -> np.ndarray:
    w, x = _as_array(w), _as_array(x)
    _require_rank(w, 2, "W")
    _require_rank(x, 1, "x")
    if w.shape[1] != x.shape[0]:
        raise ShapeError(f"matvec: W is {w.shape} but x has length {x.shape[0]}")
    return w @ x


def add(a, b) -> np.ndarray:
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ShapeError(f"add: {a.shape} vs {b.shape}")
    return a + b


def scale(a, alpha: float) -> np.ndarray:
    return _as_array(a) * alpha


def relu(a) -> np.ndarray:
    return np.maximum(_as_array(a), 0.0)


def argmax(a, axis: int = -1):
    """Index of the largest entry; ties resolve to the lowest index."""
    # np.argmax already returns the first maximal index.
    return np.argmax(_as_array(a), axis=axis)


def softmax(logits, axis: int = -1) -> np.ndarray:
    z = _as_array(logits)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_cross_entropy(logits, label):
    """Cross-entropy of softmax(logits) against an integer class label.

    Accepts a single logit vector with an int label, or a ``(B, k)`` batch
    with a label array.  For a batch the returned loss is the batch mean and
    ``dlogits`` is the gradient of that mean.

    Returns ``(loss, dlogits)``.
    """
    z = _as_array(logits)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    _require_rank(z, 2, "logits")
    k = z.shape[1]
    if k < 2:
        raise ShapeError("softmax_cross_entropy needs at least 2 classes")
    labels = np.atleast_1d(np.asarray(label))
    if labels.shape != (z.shape[0],):
        raise ShapeError(f"expected {z.shape[0]} labels, got shape {labels.shape}")
    if labels.dtype.kind not in "iub" or np.any(labels < 0) or np.any(labels >= k):
        raise ValueError(f"labels must be integers in [0, {k}), got {labels.tolist()[:8]}")
    labels = labels.astype(np.intp)

    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(z.shape[0])
    losses = log_norm - shifted[rows, labels]
    probs = np.exp(shifted - log_norm[:, None])
    dlogits = probs
    dlogits[rows, labels] -= 1.0

    if single:
        return float(losses[0]), dlogits[0]
    b = z.shape[0]
    return float(losses.mean()), dlogits / b


def log_softmax(logits) -> np.ndarray:
    """Row-wise log-softmax of a ``(B, k)`` batch."""
    z = _as_array(logits)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
