"""Central-difference gradient checking for hand-written backward passes.

``loss_fn`` must run a forward and backward pass: it returns the scalar loss
and leaves analytic gradients in the store's ``grad`` arrays.  The check then
perturbs every trainable scalar by +/-eps, recomputes the loss, and compares
(f(x+eps) - f(x-eps)) / (2 eps) against the analytic value.  ``loss_fn`` has
to be deterministic (dropout disabled, fixed inputs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import NumericError, ParamStore


@dataclass
class ParamCheck:
    name: str
    max_rel_error: float
    worst_index: tuple
    analytic: float
    numeric: float


@dataclass
class GradCheckReport:
    tol: float
    eps: float
    params: list

    @property
    def max_rel_error(self) -> float:
        return max((p.max_rel_error for p in self.params), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol

    def summary(self) -> str:
        lines = [
            f"{'PASS' if p.max_rel_error < self.tol else 'FAIL'}  {p.name}: "
            f"max rel err {p.max_rel_error:.3e} at {p.worst_index} "
            f"(analytic {p.analytic:+.6e}, numeric {p.numeric:+.6e})"
            for p in self.params
        ]
        lines.append(f"overall max rel err {self.max_rel_error:.3e} (tol {self.tol:.1e})")
        return "\n".join(lines)


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(1e-8, abs(a) + abs(n))


def grad_check(loss_fn, store: ParamStore, eps: float = 1e-5, tol: float = 1e-4) -> GradCheckReport:
    """Compare analytic gradients from ``loss_fn`` against central differences."""
    if not 1e-6 <= eps <= 1e-4:
        raise ValueError(f"eps must lie in [1e-6, 1e-4], got {eps}")

    store.zero_grads()
    base = float(loss_fn(store))
    if not np.isfinite(base):
        raise NumericError("loss is non-finite at the evaluation point")
    analytic = {name: p.grad.copy() for name, p in store.trainable_items()}

    checks = []
    for name, p in store.trainable_items():
        grad = analytic[name]
        worst = ParamCheck(name=name, max_rel_error=0.0, worst_index=(), analytic=0.0, numeric=0.0)
        flat = p.value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(loss_fn(store))
            flat[i] = orig - eps
            f_minus = float(loss_fn(store))
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NumericError(f"loss non-finite while perturbing {name}[{i}]")
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(grad.reshape(-1)[i])
            err = relative_error(a, numeric)
            if err > worst.max_rel_error:
                worst.max_rel_error = err
                worst.worst_index = np.unravel_index(i, p.value.shape)
                worst.analytic = a
                worst.numeric = numeric
        checks.append(worst)

    # restore analytic grads so callers can keep using them
    for name, p in store.trainable_items():
        p.grad[...] = analytic[name]
    return GradCheckReport(tol=tol, eps=eps, params=checks)
