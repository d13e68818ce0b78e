"""Dense float64 tensors and the named parameter store.

Tensors are plain C-contiguous ``numpy.float64`` arrays.  There is no
broadcasting at module seams: shape mismatches raise ``ShapeError`` instead
of being silently repaired, and values entering or leaving a computation can
be checked with ``assert_finite`` so NaN/Inf never propagate unnoticed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

Tensor = np.ndarray


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


class NumericError(ArithmeticError):
    """A computation produced NaN or Inf."""


def tensor(data, shape=None) -> Tensor:
    """Build a float64 C-order array, optionally reshaped to ``shape``."""
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if shape is not None:
        arr = arr.reshape(shape)
    return arr


def zeros(shape) -> Tensor:
    return np.zeros(shape, dtype=np.float64)


def assert_finite(arr, context: str = "tensor") -> None:
    """Raise NumericError when ``arr`` contains NaN or Inf."""
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {context}")


def require_shape(arr: Tensor, shape: tuple, context: str = "tensor") -> None:
    if tuple(arr.shape) != tuple(shape):
        raise ShapeError(f"{context}: expected shape {tuple(shape)}, got {tuple(arr.shape)}")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of a (m,k) and b (k,n) with explicit shape errors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} vs {b.shape}")
    out = a @ b
    assert_finite(out, "matmul result")
    return out


@dataclass
class Param:
    """One named parameter: its value, gradient and trainability flag.

    ``value`` and ``grad`` alias the arrays the owning layer computes with,
    so all mutation must be in place (``+=`` or ``[...] =``).
    """

    value: Tensor
    grad: Tensor
    trainable: bool = True


@dataclass
class ParamStore:
    """Ordered map from parameter path ("layer/param") to Param."""

    _entries: dict = field(default_factory=dict)

    def add(self, name: str, value: Tensor, grad: Tensor | None = None, trainable: bool = True) -> Param:
        if name in self._entries:
            raise ValueError(f"duplicate parameter name {name!r}")
        value = np.ascontiguousarray(value, dtype=np.float64)
        if grad is None:
            grad = np.zeros_like(value)
        elif grad.shape != value.shape:
            raise ShapeError(f"grad shape {grad.shape} != value shape {value.shape} for {name!r}")
        entry = Param(value=value, grad=grad, trainable=trainable)
        self._entries[name] = entry
        return entry

    def __getitem__(self, name: str) -> Param:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list:
        return list(self._entries)

    def items(self) -> Iterator:
        return iter(self._entries.items())

    def trainable_items(self) -> Iterator:
        return ((n, p) for n, p in self._entries.items() if p.trainable)

    def zero_grads(self) -> None:
        for p in self._entries.values():
            p.grad[...] = 0.0

    def size(self) -> int:
        """Total number of scalars across all entries."""
        return sum(p.value.size for p in self._entries.values())

    def set_trainable(self, prefix: str, trainable: bool) -> int:
        """Flip trainability for every entry under ``prefix/``; returns count."""
        hits = 0
        for name, p in self._entries.items():
            if name == prefix or name.startswith(prefix + "/"):
                p.trainable = trainable
                hits += 1
        if hits == 0:
            raise KeyError(f"no parameters under prefix {prefix!r}")
        return hits
