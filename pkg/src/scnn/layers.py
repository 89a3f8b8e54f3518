"""Differentiable layers with hand-written backward passes.

Every layer follows the same contract::

    out, cache = layer.forward(x)
    dx = layer.backward(dout, cache)   # also accumulates into param.grad

Inputs carry a leading batch axis.  ``cache`` holds whatever the backward
pass needs, so a layer object can serve several forward calls before their
backward passes run.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import DTYPE, Prng, ShapeError, Tensor

INIT_RANGE = 0.05


def _uniform(prng: Prng | None, shape) -> np.ndarray:
    if prng is None:
        return np.zeros(shape, dtype=DTYPE)
    return prng.uniform(-INIT_RANGE, INIT_RANGE, shape)


# -- swarm filter, per-sample reference form -------------------------------

def swarm_filter_forward(x, s) -> np.ndarray:
    """Swarm feature of a rank-1 input: ``f[j] = mean_i(x[i] * s[j])``.

    Evaluated in the collapsed form ``mean(x) * s``.
    """
    x = np.asarray(x, dtype=DTYPE)
    s = np.asarray(s, dtype=DTYPE)
    if x.ndim != 1 or s.ndim != 1:
        raise ShapeError(f"swarm filter expects rank-1 x and s, got {x.shape} and {s.shape}")
    if x.size == 0:
        raise ValueError("swarm filter input is empty; the mean over zero elements is undefined")
    if s.size == 0:
        raise ShapeError("swarm filter vector must have at least one element")
    return x.mean() * s


def swarm_filter_backward(g, x, s):
    """Return ``(dx, ds)`` for upstream gradient ``g`` of :func:`swarm_filter_forward`."""
    g = np.asarray(g, dtype=DTYPE)
    x = np.asarray(x, dtype=DTYPE)
    s = np.asarray(s, dtype=DTYPE)
    if g.shape != s.shape:
        raise ShapeError(f"upstream gradient {g.shape} does not match filter {s.shape}")
    ds = g * x.mean()
    dx = np.full(x.shape, float(g @ s) / x.size)
    return dx, ds


# -- layers ----------------------------------------------------------------

class Layer:
    """Base class; subclasses set ``self.params`` and implement forward/backward."""

    params: list

    def __init__(self):
        self.params = []

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dout, cache):
        raise NotImplementedError

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params)

    def output_shape(self, input_shape: tuple) -> tuple:
        """Per-sample output shape for a per-sample ``input_shape``."""
        raise NotImplementedError


class Embedding(Layer):
    """Token lookup; a ``(B, L)`` id batch becomes ``(B, L*d)`` concatenated rows."""

    def __init__(self, vocab_size: int, dim: int, prng: Prng | None = None, name: str = "embedding"):
        super().__init__()
        self.vocab_size = vocab_size
        self.dim = dim
        self.weight = Tensor(_uniform(prng, (vocab_size, dim)), f"{name}.weight")
        self.params = [self.weight]

    def forward(self, ids):
        ids = np.asarray(ids)
        if ids.ndim != 2:
            raise ShapeError(f"embedding expects (batch, length) ids, got {ids.shape}")
        bad = np.argwhere((ids < 0) | (ids >= self.vocab_size))
        if bad.size:
            b, pos = bad[0]
            raise ValueError(
                f"token id {ids[b, pos]} at sample {b}, position {pos} is outside "
                f"vocabulary of size {self.vocab_size}"
            )
        out = self.weight.data[ids].reshape(ids.shape[0], -1)
        return out, ids

    def backward(self, dout, ids):
        d = self.dim
        np.add.at(self.weight.grad, ids.ravel(), dout.reshape(-1, d))
        return None

    def output_shape(self, input_shape):
        return (input_shape[0] * self.dim,)


class SwarmFilter(Layer):
    """Swarm filter of width ``m``: maps each row x to ``mean(x) * s``. No bias.

    Seeded initialization draws ``s`` from ``1 + U(-0.05, 0.05)``.  Stacked
    filters multiply by ``mean(s)``; a zero-centred ``s`` would shrink every
    gradient through the stack below Adam's epsilon.
    """

    def __init__(self, m: int, prng: Prng | None = None, name: str = "swarm"):
        super().__init__()
        if m < 1:
            raise ValueError("swarm filter width must be positive")
        init = _uniform(prng, (m,))
        if prng is not None:
            init += 1.0
        self.s = Tensor(init, f"{name}.s")
        self.params = [self.s]

    @property
    def width(self) -> int:
        return self.s.size

    def forward(self, x):
        x = np.asarray(x, dtype=DTYPE)
        if x.ndim != 2:
            raise ShapeError(f"swarm filter expects (batch, n), got {x.shape}")
        if x.shape[1] == 0:
            raise ValueError("swarm filter input is empty")
        mu = x.mean(axis=1)
        return mu[:, None] * self.s.data[None, :], (mu, x.shape[1])

    def backward(self, dout, cache):
        mu, n = cache
        if dout.shape[1:] != self.s.shape:
            raise ShapeError(f"upstream gradient {dout.shape} does not match filter {self.s.shape}")
        self.s.grad += mu @ dout
        per_row = (dout @ self.s.data) / n
        return np.repeat(per_row[:, None], n, axis=1)

    def output_shape(self, input_shape):
        return (self.width,)


class Dense(Layer):
    """Fully connected ``y = W x + b`` with ``W`` of shape ``(out, in)``."""

    def __init__(self, n_in: int, n_out: int, prng: Prng | None = None, name: str = "dense"):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.W = Tensor(_uniform(prng, (n_out, n_in)), f"{name}.W")
        self.b = Tensor.zeros((n_out,), f"{name}.b")
        self.params = [self.W, self.b]

    def forward(self, x):
        x = np.asarray(x, dtype=DTYPE)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeError(f"dense layer expects (batch, {self.n_in}), got {x.shape}")
        return x @ self.W.data.T + self.b.data, x

    def backward(self, dout, x):
        if dout.shape != (x.shape[0], self.n_out):
            raise ShapeError(f"dense upstream gradient {dout.shape}, expected {(x.shape[0], self.n_out)}")
        self.W.grad += dout.T @ x
        self.b.grad += dout.sum(axis=0)
        return dout @ self.W.data

    def output_shape(self, input_shape):
        if input_shape != (self.n_in,):
            raise ShapeError(f"dense layer expects input ({self.n_in},), got {input_shape}")
        return (self.n_out,)


class ReLU(Layer):
    def forward(self, x):
        mask = x > 0
        return np.where(mask, x, 0.0), mask

    def backward(self, dout, mask):
        return np.where(mask, dout, 0.0)

    def output_shape(self, input_shape):
        return input_shape


class Reshape(Layer):
    """Reshape the per-sample part of a batch."""

    def __init__(self, *shape):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x):
        return x.reshape((x.shape[0],) + self.shape), x.shape

    def backward(self, dout, in_shape):
        return dout.reshape(in_shape)

    def output_shape(self, input_shape):
        if int(np.prod(input_shape)) != int(np.prod(self.shape)):
            raise ShapeError(f"cannot reshape {input_shape} to {self.shape}")
        return self.shape


class Conv2D(Layer):
    """Valid, stride-1 cross-correlation of a single-channel map with C kernels.

    Input ``(B, H, W)``; output ``(B, C, H-kh+1, W-kw+1)``.
    """

    def __init__(self, channels: int, kh: int, kw: int, prng: Prng | None = None, name: str = "conv"):
        super().__init__()
        self.kernels = Tensor(_uniform(prng, (channels, kh, kw)), f"{name}.kernels")
        self.bias = Tensor.zeros((channels,), f"{name}.bias")
        self.params = [self.kernels, self.bias]

    @property
    def kernel_shape(self):
        return self.kernels.shape[1:]

    def output_shape(self, input_shape):
        h, w = input_shape
        kh, kw = self.kernel_shape
        if kh > h or kw > w:
            raise ShapeError(f"kernel {kh}x{kw} is larger than input {h}x{w}")
        return (self.kernels.shape[0], h - kh + 1, w - kw + 1)

    def forward(self, x):
        x = np.asarray(x, dtype=DTYPE)
        if x.ndim != 3:
            raise ShapeError(f"conv expects (batch, H, W), got {x.shape}")
        c, ho, wo = self.output_shape(x.shape[1:])
        kh, kw = self.kernel_shape
        b = x.shape[0]
        # im2col: one row per (sample, output position)
        cols = np.ascontiguousarray(sliding_window_view(x, (kh, kw), axis=(1, 2))).reshape(b * ho * wo, kh * kw)
        out = cols @ self.kernels.data.reshape(c, -1).T + self.bias.data
        return out.reshape(b, ho, wo, c).transpose(0, 3, 1, 2), (x.shape, cols)

    def backward(self, dout, cache):
        x_shape, cols = cache
        kh, kw = self.kernel_shape
        b, c, ho, wo = dout.shape
        g = dout.transpose(0, 2, 3, 1).reshape(b * ho * wo, c)
        self.kernels.grad += (g.T @ cols).reshape(c, kh, kw)
        self.bias.grad += g.sum(axis=0)
        dcols = (g @ self.kernels.data.reshape(c, -1)).reshape(b, ho, wo, kh, kw)
        dx = np.zeros(x_shape)
        for i in range(ho):
            for j in range(wo):
                dx[:, i:i + kh, j:j + kw] += dcols[:, i, j]
        return dx


class MaxPool2D(Layer):
    """Non-overlapping k x k max pooling over ``(B, C, H, W)``; keeps partial edge windows."""

    def __init__(self, k: int):
        super().__init__()
        if k < 1:
            raise ValueError("pool size must be positive")
        self.k = k

    def output_shape(self, input_shape):
        c, h, w = input_shape
        k = self.k
        return (c, -(-h // k), -(-w // k))

    def forward(self, x):
        x = np.asarray(x, dtype=DTYPE)
        if x.ndim != 4:
            raise ShapeError(f"max pool expects (batch, C, H, W), got {x.shape}")
        b, c, h, w = x.shape
        k = self.k
        ho, wo = -(-h // k), -(-w // k)
        padded = np.full((b, c, ho * k, wo * k), -np.inf)
        padded[:, :, :h, :w] = x
        # (B, C, Ho, Wo, k*k), window cells in row-major order
        blocks = padded.reshape(b, c, ho, k, wo, k).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, ho, wo, k * k)
        idx = blocks.argmax(axis=-1)
        out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
        return out, (x.shape, idx)

    def backward(self, dout, cache):
        (b, c, h, w), idx = cache
        k = self.k
        ho, wo = idx.shape[2:]
        blocks = np.zeros((b, c, ho, wo, k * k))
        np.put_along_axis(blocks, idx[..., None], dout[..., None], axis=-1)
        full = blocks.reshape(b, c, ho, wo, k, k).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, ho * k, wo * k)
        return full[:, :, :h, :w].copy()


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class LSTMCellParams:
    """Weights of one LSTM direction: gates ordered i, f, g, o, two bias vectors."""

    def __init__(self, n_in: int, hidden: int, prng: Prng | None, name: str):
        h4 = 4 * hidden
        self.hidden = hidden
        self.W_ih = Tensor(_uniform(prng, (h4, n_in)), f"{name}.W_ih")
        self.W_hh = Tensor(_uniform(prng, (h4, hidden)), f"{name}.W_hh")
        self.b_ih = Tensor.zeros((h4,), f"{name}.b_ih")
        self.b_hh = Tensor.zeros((h4,), f"{name}.b_hh")

    @property
    def params(self):
        return [self.W_ih, self.W_hh, self.b_ih, self.b_hh]


def lstm_forward(x, p: LSTMCellParams):
    """Run one direction over ``x`` of shape ``(B, L, in)``; returns ``(H, cache)``."""
    b, L, _ = x.shape
    h = p.hidden
    # time-major buffers keep each step's slice contiguous
    xt = np.ascontiguousarray(x.transpose(1, 0, 2))
    hs = np.zeros((L + 1, b, h))
    cs = np.zeros((L + 1, b, h))
    gates = np.empty((L, b, 4 * h))
    x_proj = xt @ p.W_ih.data.T + (p.b_ih.data + p.b_hh.data)
    W_hh_T = np.ascontiguousarray(p.W_hh.data.T)
    for t in range(L):
        a = x_proj[t] + hs[t] @ W_hh_T
        act = gates[t]
        act[:] = _sigmoid(a)
        act[:, 2 * h:3 * h] = np.tanh(a[:, 2 * h:3 * h])
        i, f, g, o = act[:, :h], act[:, h:2 * h], act[:, 2 * h:3 * h], act[:, 3 * h:]
        cs[t + 1] = f * cs[t] + i * g
        hs[t + 1] = o * np.tanh(cs[t + 1])
    return hs[1:].transpose(1, 0, 2), (xt, hs, cs, gates)


def lstm_backward(dH, cache, p: LSTMCellParams):
    """Backpropagation through time for :func:`lstm_forward`; returns ``dx``."""
    xt, hs, cs, gates = cache
    L, b, _ = xt.shape
    h = p.hidden
    W_hh = p.W_hh.data
    dHt = np.ascontiguousarray(dH.transpose(1, 0, 2))
    da_all = np.empty((L, b, 4 * h))
    dh_next = np.zeros((b, h))
    dc_next = np.zeros((b, h))
    for t in reversed(range(L)):
        i = gates[t, :, :h]
        f = gates[t, :, h:2 * h]
        g = gates[t, :, 2 * h:3 * h]
        o = gates[t, :, 3 * h:]
        tc = np.tanh(cs[t + 1])
        dh = dHt[t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        da = da_all[t]
        da[:, :h] = dc * g * i * (1.0 - i)
        da[:, h:2 * h] = dc * cs[t] * f * (1.0 - f)
        da[:, 2 * h:3 * h] = dc * i * (1.0 - g * g)
        da[:, 3 * h:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dh_next = da @ W_hh
    flat_da = da_all.reshape(L * b, 4 * h)
    p.W_ih.grad += flat_da.T @ xt.reshape(L * b, -1)
    p.W_hh.grad += flat_da.T @ hs[:-1].reshape(L * b, h)
    db = flat_da.sum(axis=0)
    p.b_ih.grad += db
    p.b_hh.grad += db
    return (flat_da @ p.W_ih.data).reshape(L, b, -1).transpose(1, 0, 2)


class BiLSTM(Layer):
    """Stacked bidirectional LSTM over ``(B, L, d)`` inputs.

    Each layer emits the per-step concatenation of forward and backward hidden
    states (``2*hidden``); the next layer consumes that sequence.  The output is
    the concatenation of the forward direction's state after the last step and
    the backward direction's state after its last step (position 0).
    """

    def __init__(self, n_in: int, hidden: int, num_layers: int = 2, prng: Prng | None = None,
                 name: str = "bilstm"):
        super().__init__()
        self.hidden = hidden
        self.n_in = n_in
        self.cells = []
        for layer in range(num_layers):
            width = n_in if layer == 0 else 2 * hidden
            fwd = LSTMCellParams(width, hidden, prng, f"{name}.l{layer}.fwd")
            bwd = LSTMCellParams(width, hidden, prng, f"{name}.l{layer}.bwd")
            self.cells.append((fwd, bwd))
            self.params += fwd.params + bwd.params

    def output_shape(self, input_shape):
        if len(input_shape) != 2 or input_shape[1] != self.n_in:
            raise ShapeError(f"BiLSTM expects (L, {self.n_in}), got {input_shape}")
        return (2 * self.hidden,)

    def forward(self, x):
        x = np.asarray(x, dtype=DTYPE)
        if x.ndim != 3 or x.shape[1] == 0:
            raise ValueError(f"BiLSTM expects a non-empty (batch, L, d) sequence, got {x.shape}")
        caches = []
        seq = x
        for fwd, bwd in self.cells:
            out_f, cache_f = lstm_forward(seq, fwd)
            out_b_rev, cache_b = lstm_forward(seq[:, ::-1], bwd)
            caches.append((cache_f, cache_b))
            seq = np.concatenate([out_f, out_b_rev[:, ::-1]], axis=2)
        h = self.hidden
        summary = np.concatenate([seq[:, -1, :h], seq[:, 0, h:]], axis=1)
        return summary, (caches, seq.shape)

    def backward(self, dout, cache):
        caches, seq_shape = cache
        h = self.hidden
        dseq = np.zeros(seq_shape)
        dseq[:, -1, :h] = dout[:, :h]
        dseq[:, 0, h:] += dout[:, h:]
        for (fwd, bwd), (cache_f, cache_b) in zip(reversed(self.cells), reversed(caches)):
            dx_f = lstm_backward(dseq[:, :, :h], cache_f, fwd)
            dx_b = lstm_backward(dseq[:, ::-1, h:], cache_b, bwd)
            dseq = dx_f + dx_b[:, ::-1]
        return dseq


def lstm_param_count(n_in: int, hidden: int) -> int:
    """Parameters of one LSTM direction under the two-bias formulation."""
    return 4 * ((n_in + hidden) * hidden + 2 * hidden)
