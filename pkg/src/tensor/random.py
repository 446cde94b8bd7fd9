from __future__ import annotations

import math
from typing import Sequence, Tuple, Union

import numpy as np

MASK64 = (1 << 64) - 1

Shape = Union[int, Sequence[int]]


class GaussianSampler:
    """
    Seeded sampler built on numpy's Philox4x64 counter-based bit generator.

    Gaussian variates come from the Box-Muller transform applied to Philox
    uniforms, so a (seed, *stream) key reproduces the same bits on every run
    and platform. Streams let callers carve independent sequences out of one
    master seed, e.g. ``GaussianSampler(seed, step)`` for per-step noise.
    """

    def __init__(self, seed: int, *stream: int):
        self.seed = int(seed) & MASK64
        self.stream: Tuple[int, ...] = tuple(int(s) & MASK64 for s in stream)
        sequence = np.random.SeedSequence([self.seed, *self.stream])
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def uniform(self, shape: Shape) -> np.ndarray:
        """Uniform variates on [0, 1)."""
        return self._generator.random(shape)

    def normal(self, shape: Shape, std: float = 1.0) -> np.ndarray:
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        count = math.prod(shape)
        half = (count + 1) // 2
        u1 = 1.0 - self._generator.random(half)
        u2 = self._generator.random(half)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:count]
        return z.reshape(shape) * float(std)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def choice(self, n: int, size: int) -> np.ndarray:
        """`size` distinct indices drawn uniformly from range(n)."""
        return self._generator.permutation(n)[:size]

    def spawn_seeds(self, count: int) -> list[int]:
        """Independent 64-bit child seeds, e.g. one per Monte-Carlo trial."""
        return [int(s) for s in self._generator.integers(0, MASK64, size=count, dtype=np.uint64, endpoint=True)]
