"""Forward and backward passes for every layer of the network.

All layers operate on batched float64 arrays and compute their own gradients
(no autodiff graph).  Parameter and gradient arrays are owned by the layer
objects; a ParamStore registers views of the same arrays, so updates must be
in place.  Per-sample convenience wrappers at the bottom mirror the batched
implementations for single inputs.

LSTM gate order is (i, f, g, o): input gate, forget gate, candidate (tanh),
output gate, stacked along the first axis of W (4H x d_in), U (4H x H) and
the single shared bias (4H).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .rng import Rng
from .tensor import ParamStore, ShapeError, Tensor, zeros


def glorot_uniform(rng: Rng, shape: tuple, fan_in: int, fan_out: int) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform_range(-limit, limit, shape)


def sigmoid(x: Tensor) -> Tensor:
    # evaluate exp only on the side that cannot overflow
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def conv_output_length(length: int, width: int, stride: int) -> int:
    if length < width:
        raise ShapeError(f"input length {length} shorter than kernel width {width}")
    return (length - width) // stride + 1


class Conv1d:
    """Valid 1-D convolution over (batch, channels, length) arrays."""

    def __init__(self, in_channels: int, filters: int, width: int, stride: int, rng: Rng):
        if min(in_channels, filters, width, stride) < 1:
            raise ValueError("conv dimensions must be positive")
        self.in_channels = in_channels
        self.filters = filters
        self.width = width
        self.stride = stride
        self.weights = np.empty((filters, in_channels, width))
        self.bias = zeros(filters)
        self.gweights = np.zeros_like(self.weights)
        self.gbias = np.zeros_like(self.bias)
        self.reinit(rng)

    def reinit(self, rng: Rng) -> None:
        fan_in = self.in_channels * self.width
        fan_out = self.filters * self.width
        self.weights[...] = glorot_uniform(rng, self.weights.shape, fan_in, fan_out)
        self.bias[...] = 0.0

    def register(self, store: ParamStore, prefix: str) -> None:
        store.add(f"{prefix}/weights", self.weights, grad=self.gweights)
        store.add(f"{prefix}/bias", self.bias, grad=self.gbias)

    def output_length(self, length: int) -> int:
        return conv_output_length(length, self.width, self.stride)

    def forward(self, x: Tensor):
        """x (B, C, L) -> y (B, F, L') with y[b,f,t] = b[f] + sum w[f,c,j] x[b,c,t*s+j]."""
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(f"conv input must be (B, {self.in_channels}, L), got {x.shape}")
        self.output_length(x.shape[2])
        windows = sliding_window_view(x, self.width, axis=2)[:, :, :: self.stride, :]
        y = np.einsum("bclk,fck->bfl", windows, self.weights, optimize=True)
        y += self.bias[None, :, None]
        return y, (x.shape, windows)

    def backward(self, cache, dy: Tensor) -> Tensor:
        x_shape, windows = cache
        self.gweights += np.einsum("bfl,bclk->fck", dy, windows, optimize=True)
        self.gbias += dy.sum(axis=(0, 2))
        dx = np.zeros(x_shape)
        n_out = dy.shape[2]
        span = (n_out - 1) * self.stride + 1
        for j in range(self.width):
            dx[:, :, j : j + span : self.stride] += np.einsum(
                "bfl,fc->bcl", dy, self.weights[:, :, j], optimize=True
            )
        return dx


def relu_forward(x: Tensor):
    mask = x > 0
    return x * mask, mask


def relu_backward(mask: Tensor, dy: Tensor) -> Tensor:
    return dy * mask


class DropoutSpec:
    """Inverted dropout: train mode zeroes units with prob p and rescales
    survivors by 1/(1-p); eval mode is the identity."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x: Tensor, mode: str, rng: Rng | None):
        if mode not in ("train", "eval"):
            raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
        if mode == "eval" or self.rate == 0.0:
            mask = np.ones_like(x)
            return x.copy() if mode == "train" else x, mask
        if rng is None:
            raise ValueError("train-mode dropout needs an rng")
        mask = (rng.uniform(x.shape) >= self.rate).astype(np.float64)
        return x * mask / (1.0 - self.rate), mask

    def backward(self, mask: Tensor, dy: Tensor, mode: str) -> Tensor:
        if mode == "eval" or self.rate == 0.0:
            return dy
        return dy * mask / (1.0 - self.rate)


class Lstm:
    """Single-direction LSTM returning the final hidden state of a sequence."""

    def __init__(self, input_size: int, hidden_size: int, rng: Rng):
        self.input_size = input_size
        self.hidden_size = hidden_size
        h = hidden_size
        self.W = np.empty((4 * h, input_size))
        self.U = np.empty((4 * h, h))
        self.b = zeros(4 * h)
        self.gW = np.zeros_like(self.W)
        self.gU = np.zeros_like(self.U)
        self.gb = np.zeros_like(self.b)
        self.reinit(rng)

    def reinit(self, rng: Rng) -> None:
        h = self.hidden_size
        self.W[...] = glorot_uniform(rng, self.W.shape, self.input_size, h)
        self.U[...] = glorot_uniform(rng, self.U.shape, h, h)
        self.b[...] = 0.0
        self.b[h : 2 * h] = 1.0  # forget-gate bias offset

    def register(self, store: ParamStore, prefix: str) -> None:
        store.add(f"{prefix}/W", self.W, grad=self.gW)
        store.add(f"{prefix}/U", self.U, grad=self.gU)
        store.add(f"{prefix}/b", self.b, grad=self.gb)

    def _gates(self, x_t: Tensor, h_prev: Tensor):
        h = self.hidden_size
        z = x_t @ self.W.T + h_prev @ self.U.T + self.b
        i = sigmoid(z[:, :h])
        f = sigmoid(z[:, h : 2 * h])
        g = np.tanh(z[:, 2 * h : 3 * h])
        o = sigmoid(z[:, 3 * h :])
        return i, f, g, o

    def forward(self, x: Tensor):
        """x (B, T, D) -> final hidden state (B, H); zero initial states."""
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ShapeError(f"lstm input must be (B, T, {self.input_size}), got {x.shape}")
        if x.shape[1] < 1:
            raise ShapeError("lstm requires at least one timestep")
        batch, steps, _ = x.shape
        h_t = zeros((batch, self.hidden_size))
        c_t = zeros((batch, self.hidden_size))
        caches = []
        for t in range(steps):
            x_t = x[:, t, :]
            i, f, g, o = self._gates(x_t, h_t)
            c_new = f * c_t + i * g
            tc = np.tanh(c_new)
            caches.append((x_t, h_t, c_t, i, f, g, o, tc))
            h_t = o * tc
            c_t = c_new
        return h_t, caches

    def backward(self, caches, dh_last: Tensor) -> Tensor:
        """Backprop through time from a gradient on the final hidden state."""
        steps = len(caches)
        batch = dh_last.shape[0]
        dx = zeros((batch, steps, self.input_size))
        dh = dh_last
        dc = zeros((batch, self.hidden_size))
        for t in range(steps - 1, -1, -1):
            x_t, h_prev, c_prev, i, f, g, o, tc = caches[t]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dz = np.concatenate(
                [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), do * o * (1.0 - o)],
                axis=1,
            )
            self.gW += dz.T @ x_t
            self.gU += dz.T @ h_prev
            self.gb += dz.sum(axis=0)
            dx[:, t, :] = dz @ self.W
            dh = dz @ self.U
            dc = dc * f
        return dx

    def step(self, x_t: Tensor, h_prev: Tensor, c_prev: Tensor):
        """One recurrence step for single vectors; returns (h, c)."""
        i, f, g, o = self._gates(x_t[None, :], h_prev[None, :])
        c = f[0] * c_prev + i[0] * g[0]
        h = o[0] * np.tanh(c)
        return h, c


class BiLstm:
    """Forward and backward LSTMs over the same sequence; output is the
    concatenation of their final hidden states (2H)."""

    def __init__(self, input_size: int, hidden_size: int, rng: Rng):
        self.fwd = Lstm(input_size, hidden_size, rng.spawn("fwd"))
        self.bwd = Lstm(input_size, hidden_size, rng.spawn("bwd"))
        self.hidden_size = hidden_size

    def reinit(self, rng: Rng) -> None:
        self.fwd.reinit(rng.spawn("fwd"))
        self.bwd.reinit(rng.spawn("bwd"))

    def register(self, store: ParamStore, prefix: str) -> None:
        self.fwd.register(store, f"{prefix}/fwd")
        self.bwd.register(store, f"{prefix}/bwd")

    def forward(self, x: Tensor):
        h_f, cache_f = self.fwd.forward(x)
        h_b, cache_b = self.bwd.forward(x[:, ::-1, :])
        return np.concatenate([h_f, h_b], axis=1), (cache_f, cache_b)

    def backward(self, cache, dy: Tensor) -> Tensor:
        cache_f, cache_b = cache
        h = self.hidden_size
        dx_f = self.fwd.backward(cache_f, dy[:, :h])
        dx_b = self.bwd.backward(cache_b, dy[:, h:])
        return dx_f + dx_b[:, ::-1, :]


class Dense:
    """Fully connected layer, optional tanh activation."""

    def __init__(self, in_size: int, out_size: int, activation: str, rng: Rng):
        if activation not in ("tanh", "none"):
            raise ValueError(f"unknown activation {activation!r}")
        self.in_size = in_size
        self.out_size = out_size
        self.activation = activation
        self.weights = np.empty((out_size, in_size))
        self.bias = zeros(out_size)
        self.gweights = np.zeros_like(self.weights)
        self.gbias = np.zeros_like(self.bias)
        self.reinit(rng)

    def reinit(self, rng: Rng) -> None:
        self.weights[...] = glorot_uniform(rng, self.weights.shape, self.in_size, self.out_size)
        self.bias[...] = 0.0

    def register(self, store: ParamStore, prefix: str) -> None:
        store.add(f"{prefix}/weights", self.weights, grad=self.gweights)
        store.add(f"{prefix}/bias", self.bias, grad=self.gbias)

    def forward(self, x: Tensor):
        if x.ndim != 2 or x.shape[1] != self.in_size:
            raise ShapeError(f"dense input must be (B, {self.in_size}), got {x.shape}")
        z = x @ self.weights.T + self.bias
        if self.activation == "tanh":
            y = np.tanh(z)
            return y, (x, y)
        return z, (x, None)

    def backward(self, cache, dy: Tensor) -> Tensor:
        x, y = cache
        dz = dy * (1.0 - y * y) if self.activation == "tanh" else dy
        self.gweights += dz.T @ x
        self.gbias += dz.sum(axis=0)
        return dz @ self.weights


def softmax(logits: Tensor) -> Tensor:
    """Row-wise softmax with max subtraction; accepts (K,) or (B, K)."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_ce(logits: Tensor, label: int):
    """Cross-entropy of one sample: loss = -log softmax(logits)[label].

    Returns (loss, grad wrt logits); grad = softmax - onehot.
    """
    k = logits.shape[-1]
    if not 0 <= label < k:
        raise ValueError(f"label {label} out of range for {k} classes")
    z = logits - logits.max()
    log_norm = np.log(np.exp(z).sum())
    loss = float(log_norm - z[label])
    grad = softmax(logits)
    grad[label] -= 1.0
    return loss, grad


def softmax_ce_batch(logits: Tensor, labels: np.ndarray):
    """Mean cross-entropy over a batch; grad is for the mean loss."""
    batch, k = logits.shape
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError("label out of range")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(batch)
    loss = float(np.mean(log_norm - z[rows, labels]))
    grad = softmax(logits)
    grad[rows, labels] -= 1.0
    return loss, grad / batch


# -- per-sample wrappers -----------------------------------------------------

def conv1d_forward(layer: Conv1d, x: Tensor) -> Tensor:
    """Single-sample convolution: x (C, L) -> (F, L')."""
    if x.ndim != 2:
        raise ShapeError(f"expected (C, L) input, got {x.shape}")
    y, _ = layer.forward(x[None, :, :])
    return y[0]


def lstm_step(layer: Lstm, x_t: Tensor, h_prev: Tensor, c_prev: Tensor):
    return layer.step(x_t, h_prev, c_prev)


def bilstm_forward(fwd: Lstm, bwd: Lstm, x: Tensor) -> Tensor:
    """Single-sample bidirectional pass: x (T, D) -> (2H,) final states."""
    if x.ndim != 2:
        raise ShapeError(f"expected (T, D) input, got {x.shape}")
    if x.shape[0] < 1:
        raise ShapeError("empty sequence")
    h_f, _ = fwd.forward(x[None, :, :])
    h_b, _ = bwd.forward(x[None, ::-1, :])
    return np.concatenate([h_f[0], h_b[0]])


def dropout_apply(spec: DropoutSpec, x: Tensor, rng: Rng | None, mode: str = "train"):
    return spec.forward(x, mode, rng)
