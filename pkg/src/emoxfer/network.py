"""The multi-domain network: configuration, assembly, masks, serialization.

Layer order is fixed: conv1 -> conv2 -> lstm (bidirectional) -> fc1 -> fc2
-> out, with ReLU+dropout after each convolution and tanh+dropout after each
fully connected layer.  With ``use_lstm=False`` the lstm entry is dropped and
the flattened conv2 output feeds fc1 directly (the CNN-only variant).

Weight files are a little-endian binary container: magic "MDNW", u32 version,
32-byte SHA-256 of the canonical network-config JSON, u32 tensor count, then
per tensor u32 name length, UTF-8 name, u32 rank, u64 dims and the raw
float64 payload.  Round-trips are bitwise lossless.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .layers import BiLstm, Conv1d, Dense, DropoutSpec, conv_output_length, relu_backward, relu_forward
from .rng import Rng
from .tensor import ParamStore, ShapeError, Tensor

MAGIC = b"MDNW"
VERSION = 1


class WeightFormatError(ValueError):
    """Weight file is malformed or incompatible with the given config."""


@dataclass(frozen=True)
class NetworkConfig:
    input_length: int = 54000
    conv_filters: tuple = (128, 128)
    conv_widths: tuple = (16, 16)
    conv_strides: tuple = (8, 8)
    lstm_hidden: int = 500
    fc_sizes: tuple = (1000, 1000)
    num_classes: int = 6
    dropout: float = 0.30
    use_lstm: bool = True
    scale: float = 1.0

    def resolved(self) -> "NetworkConfig":
        """Apply the shrink multiplier to all width-like fields."""
        if self.scale == 1.0:
            return self
        s = self.scale
        scaled = lambda v: max(1, int(round(v * s)))
        return replace(
            self,
            input_length=scaled(self.input_length),
            conv_filters=tuple(scaled(f) for f in self.conv_filters),
            lstm_hidden=scaled(self.lstm_hidden),
            fc_sizes=tuple(scaled(f) for f in self.fc_sizes),
            scale=1.0,
        )

    def validate(self) -> None:
        if len(self.conv_filters) != 2 or len(self.conv_widths) != 2 or len(self.conv_strides) != 2:
            raise ValueError("exactly two convolutional layers are supported")
        if len(self.fc_sizes) != 2:
            raise ValueError("exactly two fully connected layers are supported")
        sizes = (self.input_length, *self.conv_filters, *self.conv_widths,
                 *self.conv_strides, self.lstm_hidden, *self.fc_sizes)
        if min(sizes) < 1:
            raise ValueError("all sizes must be positive")
        if self.num_classes < 2:
            raise ValueError("need at least two classes")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        self.conv_lengths()  # raises if a conv output would be empty

    def conv_lengths(self) -> tuple:
        l1 = conv_output_length(self.input_length, self.conv_widths[0], self.conv_strides[0])
        l2 = conv_output_length(l1, self.conv_widths[1], self.conv_strides[1])
        return l1, l2

    def feature_size(self) -> int:
        """Width of the vector entering fc1."""
        _, l2 = self.conv_lengths()
        return 2 * self.lstm_hidden if self.use_lstm else self.conv_filters[1] * l2

    def param_count(self) -> int:
        """Closed-form parameter count.

        conv1: F1*(1*k1) + F1
        conv2: F2*(F1*k2) + F2
        lstm (per direction, x2): 4H*F2 + 4H*H + 4H
        fc1:  n1*feature + n1,  fc2: n2*n1 + n2,  out: K*n2 + K
        """
        f1, f2 = self.conv_filters
        k1, k2 = self.conv_widths
        n1, n2 = self.fc_sizes
        h = self.lstm_hidden
        total = f1 * k1 + f1
        total += f2 * f1 * k2 + f2
        if self.use_lstm:
            total += 2 * (4 * h * f2 + 4 * h * h + 4 * h)
        total += n1 * self.feature_size() + n1
        total += n2 * n1 + n2
        total += self.num_classes * n2 + self.num_classes
        return total

    def to_dict(self) -> dict:
        return {
            "input_length": self.input_length,
            "conv_filters": list(self.conv_filters),
            "conv_widths": list(self.conv_widths),
            "conv_strides": list(self.conv_strides),
            "lstm_hidden": self.lstm_hidden,
            "fc_sizes": list(self.fc_sizes),
            "num_classes": self.num_classes,
            "dropout": self.dropout,
            "use_lstm": self.use_lstm,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        kwargs = dict(d)
        for key in ("conv_filters", "conv_widths", "conv_strides", "fc_sizes"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        unknown = set(kwargs) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown network config keys: {sorted(unknown)}")
        return cls(**kwargs)

    def config_hash(self) -> bytes:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).digest()

    @classmethod
    def desk(cls) -> "NetworkConfig":
        """Small configuration for fast CPU experiments."""
        return cls(input_length=2000, conv_filters=(16, 16), conv_widths=(16, 16),
                   conv_strides=(8, 8), lstm_hidden=32, fc_sizes=(64, 64))


@dataclass(frozen=True)
class LayerMask:
    frozen: frozenset = field(default_factory=frozenset)
    reinit: frozenset = field(default_factory=frozenset)

    def validate(self, layer_names) -> None:
        overlap = self.frozen & self.reinit
        if overlap:
            raise ValueError(f"layers cannot be both frozen and reinitialized: {sorted(overlap)}")
        unknown = (self.frozen | self.reinit) - set(layer_names)
        if unknown:
            raise KeyError(f"unknown layer names in mask: {sorted(unknown)}")


class NetworkModel:
    """Assembled network with its parameter store."""

    def __init__(self, config: NetworkConfig, rng: Rng):
        config = config.resolved()
        config.validate()
        self.config = config
        f1, f2 = config.conv_filters
        k1, k2 = config.conv_widths
        s1, s2 = config.conv_strides
        self.conv1 = Conv1d(1, f1, k1, s1, rng.spawn("conv1"))
        self.conv2 = Conv1d(f1, f2, k2, s2, rng.spawn("conv2"))
        self.lstm = BiLstm(f2, config.lstm_hidden, rng.spawn("lstm")) if config.use_lstm else None
        self.fc1 = Dense(config.feature_size(), config.fc_sizes[0], "tanh", rng.spawn("fc1"))
        self.fc2 = Dense(config.fc_sizes[0], config.fc_sizes[1], "tanh", rng.spawn("fc2"))
        self.out = Dense(config.fc_sizes[1], config.num_classes, "none", rng.spawn("out"))
        self.dropout = DropoutSpec(config.dropout)

        self.params = ParamStore()
        self.conv1.register(self.params, "conv1")
        self.conv2.register(self.params, "conv2")
        if self.lstm is not None:
            self.lstm.register(self.params, "lstm")
        self.fc1.register(self.params, "fc1")
        self.fc2.register(self.params, "fc2")
        self.out.register(self.params, "out")

    def layer_names(self) -> list:
        names = ["conv1", "conv2", "lstm", "fc1", "fc2", "out"]
        if self.lstm is None:
            names.remove("lstm")
        return names

    def _layer(self, name: str):
        layer = {"conv1": self.conv1, "conv2": self.conv2, "lstm": self.lstm,
                 "fc1": self.fc1, "fc2": self.fc2, "out": self.out}[name]
        return layer

    def forward_batch(self, x: Tensor, mode: str = "eval", rng: Rng | None = None):
        """x (B, input_length) -> (logits (B, K), cache)."""
        if x.ndim != 2 or x.shape[1] != self.config.input_length:
            raise ShapeError(
                f"expected input (B, {self.config.input_length}), got {x.shape}")
        h = x[:, None, :]
        h, c_conv1 = self.conv1.forward(h)
        h, m_relu1 = relu_forward(h)
        h, m_drop1 = self.dropout.forward(h, mode, rng)
        h, c_conv2 = self.conv2.forward(h)
        h, m_relu2 = relu_forward(h)
        h, m_drop2 = self.dropout.forward(h, mode, rng)
        if self.lstm is not None:
            seq = np.ascontiguousarray(h.transpose(0, 2, 1))  # (B, T, F2)
            h, c_lstm = self.lstm.forward(seq)
        else:
            batch = h.shape[0]
            c_lstm = h.shape
            h = h.reshape(batch, -1)
        h, c_fc1 = self.fc1.forward(h)
        h, m_drop3 = self.dropout.forward(h, mode, rng)
        h, c_fc2 = self.fc2.forward(h)
        h, m_drop4 = self.dropout.forward(h, mode, rng)
        logits, c_out = self.out.forward(h)
        cache = (mode, c_conv1, m_relu1, m_drop1, c_conv2, m_relu2, m_drop2,
                 c_lstm, c_fc1, m_drop3, c_fc2, m_drop4, c_out)
        return logits, cache

    def backward_batch(self, cache, dlogits: Tensor) -> None:
        """Accumulate parameter gradients from a gradient on the logits."""
        (mode, c_conv1, m_relu1, m_drop1, c_conv2, m_relu2, m_drop2,
         c_lstm, c_fc1, m_drop3, c_fc2, m_drop4, c_out) = cache
        d = self.out.backward(c_out, dlogits)
        d = self.dropout.backward(m_drop4, d, mode)
        d = self.fc2.backward(c_fc2, d)
        d = self.dropout.backward(m_drop3, d, mode)
        d = self.fc1.backward(c_fc1, d)
        if self.lstm is not None:
            d = self.lstm.backward(c_lstm, d)
            d = np.ascontiguousarray(d.transpose(0, 2, 1))  # back to (B, F2, T)
        else:
            d = d.reshape(c_lstm)
        d = self.dropout.backward(m_drop2, d, mode)
        d = relu_backward(m_relu2, d)
        d = self.conv2.backward(c_conv2, d)
        d = self.dropout.backward(m_drop1, d, mode)
        d = relu_backward(m_relu1, d)
        self.conv1.backward(c_conv1, d)

    def predict(self, x: Tensor) -> np.ndarray:
        """Class indices for a batch, eval mode."""
        logits, _ = self.forward_batch(x, "eval", None)
        if not np.all(np.isfinite(logits)):
            raise ArithmeticError("non-finite logits during evaluation")
        return logits.argmax(axis=1)


def build_network(config: NetworkConfig, rng: Rng) -> NetworkModel:
    return NetworkModel(config, rng)


def forward(model: NetworkModel, x: Tensor, mode: str = "eval", rng: Rng | None = None) -> Tensor:
    """Single-sample forward: x (input_length,) -> logits (num_classes,)."""
    if x.ndim != 1:
        raise ShapeError(f"expected a flat waveform, got shape {x.shape}")
    logits, _ = model.forward_batch(x[None, :], mode, rng)
    return logits[0]


def apply_mask(model: NetworkModel, mask: LayerMask, rng: Rng) -> NetworkModel:
    """Freeze and/or reinitialize layers in place; returns the model."""
    mask.validate(model.layer_names())
    for name in sorted(mask.reinit):
        model._layer(name).reinit(rng.spawn(f"reinit/{name}"))
    for name in model.layer_names():
        model.params.set_trainable(name, name not in mask.frozen)
    return model


def save_weights(model: NetworkModel) -> bytes:
    parts = [MAGIC, struct.pack("<I", VERSION), model.config.config_hash()]
    entries = list(model.params.items())
    parts.append(struct.pack("<I", len(entries)))
    for name, p in entries:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", p.value.ndim))
        parts.append(struct.pack(f"<{p.value.ndim}Q", *p.value.shape))
        parts.append(p.value.astype("<f8", copy=False).tobytes(order="C"))
    return b"".join(parts)


def load_weights(data: bytes, config: NetworkConfig) -> NetworkModel:
    config = config.resolved()
    view = memoryview(data)
    if bytes(view[:4]) != MAGIC:
        raise WeightFormatError("bad magic: not a network weight file")
    (version,) = struct.unpack_from("<I", view, 4)
    if version != VERSION:
        raise WeightFormatError(f"unsupported weight file version {version}")
    if bytes(view[8:40]) != config.config_hash():
        raise WeightFormatError("weight file was saved with a different network config")
    (count,) = struct.unpack_from("<I", view, 40)
    offset = 44

    model = NetworkModel(config, Rng(0))
    seen = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", view, offset)
        offset += 4
        name = bytes(view[offset : offset + name_len]).decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<I", view, offset)
        offset += 4
        dims = struct.unpack_from(f"<{rank}Q", view, offset)
        offset += 8 * rank
        n_bytes = 8 * int(np.prod(dims, dtype=np.int64)) if rank else 8
        flat = np.frombuffer(view, dtype="<f8", count=n_bytes // 8, offset=offset)
        offset += n_bytes
        if name not in model.params:
            raise WeightFormatError(f"unexpected tensor {name!r} in weight file")
        entry = model.params[name]
        if tuple(dims) != entry.value.shape:
            raise WeightFormatError(
                f"tensor {name!r} has shape {tuple(dims)}, expected {entry.value.shape}")
        entry.value[...] = flat.reshape(dims)
        seen.append(name)
    if seen != model.params.names():
        raise WeightFormatError("weight file does not cover the full parameter set")
    return model
