"""Counter-based splitmix64 streams.

Every draw is a pure function of (seed, stream, counter), so a worker that
knows its index range can regenerate exactly the numbers a sequential run
would have used.
"""
from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int."""
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


class Stream:
    """One substream of a seeded generator.

    Substreams with distinct stream ids never overlap; inside a stream the counter advances with each draw.
    """

    def __init__(self, seed: int, stream: int = 0, counter: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.key = mix64((self.seed & MASK) ^ mix64(((self.stream + 1) * GOLDEN) & MASK))
        self.counter = int(counter)

    def spawn(self, stream: int) -> "Stream":
        return Stream(self.seed, self.stream * 1_000_003 + stream + 1)

    def raw(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix_array(np.uint64(self.key) + idx * np.uint64(GOLDEN))

    def uniform(self, shape) -> np.ndarray:
        """Doubles in [0, 1)."""
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape)) if shape else 1
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(shape)

    def normal(self, shape) -> np.ndarray:
        # Box-Muller; one pair of uniforms per pair of normals
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape)) if shape else 1
        m = (n + 1) // 2
        u = self.uniform(2 * m)
        r = np.sqrt(-2.0 * np.log1p(-u[:m]))
        t = 2.0 * np.pi * u[m:]
        out = np.concatenate([r * np.cos(t), r * np.sin(t)])[:n]
        return out.reshape(shape)

    def complex_normal(self, shape) -> np.ndarray:
        """Standard complex Gaussian, E|z|^2 = 1."""
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        g = self.normal(shape + (2,))
        return (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2.0)

    def unit_disk(self, shape) -> np.ndarray:
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        u = self.uniform(shape + (2,))
        return np.sqrt(u[..., 0]) * np.exp(2j * np.pi * u[..., 1])
