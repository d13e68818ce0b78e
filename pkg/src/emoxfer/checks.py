"""Standard gradient-check suite covering every layer and the full network.

Each check builds a tiny random instance, registers its inputs and
parameters in a ParamStore, and wires the layer into a scalar loss through
a fixed random projection so every output element influences the loss.
"""

from __future__ import annotations

import numpy as np

from .gradcheck import GradCheckReport, grad_check
from .layers import BiLstm, Conv1d, Dense, Lstm, softmax_ce, softmax_ce_batch
from .network import NetworkConfig, NetworkModel
from .rng import Rng
from .tensor import ParamStore


def _with_input(store: ParamStore, name: str, value) -> None:
    store.add(name, value)


def check_conv1d(rng: Rng, tol: float = 1e-4) -> GradCheckReport:
    channels = 1 + int(rng.uniform() * 3)
    width = 2 + int(rng.uniform() * 3)
    stride = 1 + int(rng.uniform() * 2)
    length = width + int(rng.uniform() * 9)
    filters = 1 + int(rng.uniform() * 3)
    layer = Conv1d(channels, filters, width, stride, rng.spawn("init"))
    store = ParamStore()
    layer.register(store, "conv")
    _with_input(store, "x", rng.normal((2, channels, length)))
    out_len = layer.output_length(length)
    proj = rng.normal((2, filters, out_len))

    def loss_fn(s):
        y, cache = layer.forward(s["x"].value)
        layer.gweights[...] = 0.0
        layer.gbias[...] = 0.0
        dx = layer.backward(cache, proj)
        s["x"].grad[...] = dx
        return float((y * proj).sum())

    return grad_check(loss_fn, store, tol=tol)


def check_lstm_step(rng: Rng, tol: float = 1e-4) -> GradCheckReport:
    d_in = 2 + int(rng.uniform() * 3)
    hidden = 2 + int(rng.uniform() * 3)
    layer = Lstm(d_in, hidden, rng.spawn("init"))
    store = ParamStore()
    layer.register(store, "lstm")
    _with_input(store, "x", rng.normal((2, 1, d_in)))
    proj = rng.normal((2, hidden))

    def loss_fn(s):
        h, cache = layer.forward(s["x"].value)
        layer.gW[...] = 0.0
        layer.gU[...] = 0.0
        layer.gb[...] = 0.0
        dx = layer.backward(cache, proj)
        s["x"].grad[...] = dx
        return float((h * proj).sum())

    return grad_check(loss_fn, store, tol=tol)


def check_bilstm(rng: Rng, tol: float = 1e-4) -> GradCheckReport:
    d_in = 2 + int(rng.uniform() * 3)
    hidden = 2 + int(rng.uniform() * 3)
    steps = 2 + int(rng.uniform() * 4)
    layer = BiLstm(d_in, hidden, rng.spawn("init"))
    store = ParamStore()
    layer.register(store, "lstm")
    _with_input(store, "x", rng.normal((2, steps, d_in)))
    proj = rng.normal((2, 2 * hidden))

    def loss_fn(s):
        h, cache = layer.forward(s["x"].value)
        for lstm in (layer.fwd, layer.bwd):
            lstm.gW[...] = 0.0
            lstm.gU[...] = 0.0
            lstm.gb[...] = 0.0
        dx = layer.backward(cache, proj)
        s["x"].grad[...] = dx
        return float((h * proj).sum())

    return grad_check(loss_fn, store, tol=tol)


def check_dense_tanh(rng: Rng, tol: float = 1e-4) -> GradCheckReport:
    d_in = 2 + int(rng.uniform() * 5)
    d_out = 2 + int(rng.uniform() * 5)
    layer = Dense(d_in, d_out, "tanh", rng.spawn("init"))
    store = ParamStore()
    layer.register(store, "fc")
    _with_input(store, "x", rng.normal((3, d_in)))
    proj = rng.normal((3, d_out))

    def loss_fn(s):
        y, cache = layer.forward(s["x"].value)
        layer.gweights[...] = 0.0
        layer.gbias[...] = 0.0
        dx = layer.backward(cache, proj)
        s["x"].grad[...] = dx
        return float((y * proj).sum())

    return grad_check(loss_fn, store, tol=tol)


def check_softmax_ce(rng: Rng, tol: float = 1e-4) -> GradCheckReport:
    classes = 3 + int(rng.uniform() * 5)
    label = int(rng.uniform() * classes)
    store = ParamStore()
    _with_input(store, "logits", rng.normal((classes,)))

    def loss_fn(s):
        loss, grad = softmax_ce(s["logits"].value, label)
        s["logits"].grad[...] = grad
        return loss

    return grad_check(loss_fn, store, tol=tol)


def check_full_network(rng: Rng, tol: float = 1e-4,
                       config: NetworkConfig | None = None) -> GradCheckReport:
    """Cross-entropy of a small batch through the whole network, dropout off."""
    if config is None:
        dims = rng.spawn("dims")
        config = NetworkConfig(
            input_length=48 + 4 * int(dims.uniform() * 5),
            conv_filters=(2 + int(dims.uniform() * 2), 3 + int(dims.uniform() * 2)),
            conv_widths=(8, 4), conv_strides=(4, 2),
            lstm_hidden=3 + int(dims.uniform() * 3),
            fc_sizes=(5 + int(dims.uniform() * 3), 4 + int(dims.uniform() * 3)),
            num_classes=4, dropout=0.0)
    model = NetworkModel(config, rng.spawn("init"))
    batch = 2
    x = rng.normal((batch, config.input_length))
    labels = (rng.uniform((batch,)) * config.num_classes).astype(np.int64)

    def loss_fn(store):
        store.zero_grads()
        logits, cache = model.forward_batch(x, "train", None)
        loss, dlogits = softmax_ce_batch(logits, labels)
        model.backward_batch(cache, dlogits)
        return loss

    return grad_check(loss_fn, model.params, tol=tol)


LAYER_CHECKS = {
    "conv1d": check_conv1d,
    "lstm_step": check_lstm_step,
    "bilstm": check_bilstm,
    "dense_tanh": check_dense_tanh,
    "softmax_ce": check_softmax_ce,
    "network": check_full_network,
}


def run_layer_checks(seeds=(0, 1, 2, 3, 4), shapes: int = 3, tol: float = 1e-4) -> dict:
    """Every layer check over seeds x random shapes; returns {name: worst report}."""
    worst = {}
    for name, fn in LAYER_CHECKS.items():
        for seed in seeds:
            for shape_i in range(shapes):
                report = fn(Rng(1000 + seed).spawn(f"{name}/shape{shape_i}"), tol=tol)
                if name not in worst or report.max_rel_error > worst[name].max_rel_error:
                    worst[name] = report
    return worst
