"""Deterministic, platform-independent random number generation.

The generator is counter based.  Draw number ``i`` of a stream is the
splitmix64 finalizer (Steele, Lea & Flood's mix constants) applied to
``seed + i * GAMMA``, all in wrapping 64-bit arithmetic.  Because every
output is a pure function of (seed, counter), a stream produces the same
sequence on every platform, and blocks of any size can be generated with
vectorized uint64 math.

Independent substreams are derived from a parent seed and a text label via
``spawn``: the child seed is the splitmix64 mix of ``seed XOR fnv1a64(label)``.
One master seed therefore reproduces an entire experiment.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x00000100000001B3

# 2**-53, spacing of the 53-bit uniform grid
_U53 = 1.0 / (1 << 53)


def _mix64_scalar(x: int) -> int:
    """splitmix64 finalizer on a Python int, wrapping at 64 bits."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK64
    return x ^ (x >> 31)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over a uint64 array."""
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def fnv1a64(text: str) -> int:
    """FNV-1a hash of the UTF-8 bytes of ``text``, used for stream labels."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class Rng:
    """Seeded counter-based generator.

    Identical seeds give identical draw sequences regardless of how the
    draws are grouped into calls.
    """

    def __init__(self, seed: int) -> None:
        self.seed = int(seed) & _MASK64
        self.counter = 0

    def __repr__(self) -> str:  # pragma: no cover
        return f"Rng(seed={self.seed:#x}, counter={self.counter})"

    def spawn(self, label: str) -> "Rng":
        """Derive an independent stream keyed by ``label``."""
        return Rng(_mix64_scalar(self.seed ^ fnv1a64(label)))

    def _raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words."""
        if n < 0:
            raise ValueError("draw count must be nonnegative")
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix64(np.uint64(self.seed) + idx * np.uint64(_GAMMA))

    def uniform(self, shape=None) -> np.ndarray | float:
        """Uniform float64 draws in [0, 1) on the 53-bit grid."""
        if shape is None:
            return float(self._raw(1)[0] >> np.uint64(11)) * _U53
        shape = _as_shape(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * _U53
        return u.reshape(shape)

    def normal(self, shape=None) -> np.ndarray | float:
        """Standard normal draws via the Box-Muller transform."""
        scalar = shape is None
        shape = (1,) if scalar else _as_shape(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        pairs = (n + 1) // 2
        raw = self._raw(2 * pairs)
        # u1 in (0, 1] keeps log finite; u2 in [0, 1)
        u1 = ((raw[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
        u2 = (raw[pairs:] >> np.uint64(11)).astype(np.float64) * _U53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * math.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        if scalar:
            return float(z[0])
        return z.reshape(shape)

    def uniform_range(self, low: float, high: float, shape=None):
        """Uniform draws in [low, high)."""
        return low + (high - low) * self.uniform(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) by sorting uniform keys."""
        if n < 0:
            raise ValueError("permutation length must be nonnegative")
        return np.argsort(self.uniform((n,)), kind="stable")


def _as_shape(shape) -> tuple:
    if isinstance(shape, (int, np.integer)):
        return (int(shape),)
    return tuple(int(s) for s in shape)
