"""AdaDelta optimizer over a ParamStore, honoring freeze masks.

Per trainable scalar with gradient g:

    E[g^2]  <- rho E[g^2] + (1 - rho) g^2
    delta   = -sqrt((E[dx^2] + eps) / (E[g^2] + eps)) * g
    E[dx^2] <- rho E[dx^2] + (1 - rho) delta^2
    theta   <- theta + delta

Accumulators start at zero and exist exactly for the parameters that were
trainable when the optimizer was built; non-trainable entries are never
touched.  There is no global learning rate.
"""

from __future__ import annotations

import numpy as np

from .tensor import NumericError, ParamStore


class OptimizerStateError(RuntimeError):
    """Store trainables changed after the optimizer captured its state."""


class AdaDelta:
    def __init__(self, store: ParamStore, rho: float = 0.95, eps: float = 1e-6):
        if not 0.0 < rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {rho}")
        if eps <= 0.0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.rho = rho
        self.eps = eps
        self.sq_grad = {n: np.zeros_like(p.value) for n, p in store.trainable_items()}
        self.sq_delta = {n: np.zeros_like(p.value) for n, p in store.trainable_items()}

    def step(self, store: ParamStore) -> None:
        rho, eps = self.rho, self.eps
        for name, p in store.trainable_items():
            if name not in self.sq_grad:
                raise OptimizerStateError(
                    f"parameter {name!r} became trainable after optimizer construction"
                )
            g = p.grad
            eg2 = self.sq_grad[name]
            ed2 = self.sq_delta[name]
            eg2 *= rho
            eg2 += (1.0 - rho) * g * g
            delta = -np.sqrt((ed2 + eps) / (eg2 + eps)) * g
            if not np.all(np.isfinite(delta)):
                raise NumericError(f"non-finite AdaDelta update for {name!r}")
            ed2 *= rho
            ed2 += (1.0 - rho) * delta * delta
            p.value += delta
