"""Mini-batch training loop: shuffled batches, mean-gradient AdaDelta steps."""

from __future__ import annotations

import numpy as np

from .layers import softmax_ce_batch
from .network import NetworkModel
from .optim import AdaDelta
from .rng import Rng
from .tensor import NumericError


def fit(model: NetworkModel, x: np.ndarray, labels: np.ndarray, epochs: int,
        batch_size: int, rng: Rng, rho: float = 0.95, eps: float = 1e-6) -> list:
    """Train in place; returns mean cross-entropy per epoch.

    Batch gradients are means over the batch, so the update scale does not
    depend on batch size.  Shuffling and dropout draw from ``rng``, making
    the whole run a pure function of (model, data, rng).
    """
    n = x.shape[0]
    if labels.shape[0] != n:
        raise ValueError("sample/label counts differ")
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    optimizer = AdaDelta(model.params, rho=rho, eps=eps)
    history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            model.params.zero_grads()
            logits, cache = model.forward_batch(x[idx], "train", rng)
            loss, dlogits = softmax_ce_batch(logits, labels[idx])
            if not np.isfinite(loss):
                raise NumericError("training loss became non-finite")
            model.backward_batch(cache, dlogits)
            optimizer.step(model.params)
            epoch_loss += loss * idx.size
        history.append(epoch_loss / n)
    return history
