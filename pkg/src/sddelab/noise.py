"""Deterministic Brownian increments with random access and exact coarsening.

Increments are Normal(0, base_dt) and are addressed by integer step index.
Index ``i`` always yields the same draw for a given seed, no matter in which
order indices are queried, because generation is counter-based: block ``j``
of 4096 draws comes from a Philox generator keyed by (seed, j) and nothing
else.  A coarse increment over ``m`` fine steps is defined as the
left-to-right sum of the fine draws, so consuming the stream at any integer
multiple of base_dt reproduces the same Brownian path exactly.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["NoiseSource", "BLOCK_SIZE"]

BLOCK_SIZE = 4096

_CACHE_BLOCKS = 256

_MAX_SEED = 2**64


class NoiseSource:
    """Seeded, stateless-by-index stream of Gaussian increments."""

    def __init__(self, seed: int, base_dt: float):
        if not isinstance(seed, (int, np.integer)):
            raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
        if not 0 <= seed < _MAX_SEED:
            raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
        if not (base_dt > 0.0 and math.isfinite(base_dt)):
            raise ValueError(f"base_dt must be positive and finite, got {base_dt}")
        self.seed = int(seed)
        self.base_dt = float(base_dt)
        self._scale = math.sqrt(base_dt)
        self._blocks: dict[int, np.ndarray] = {}

    def _block(self, j: int) -> np.ndarray:
        blk = self._blocks.get(j)
        if blk is None:
            key = (self.seed << 64) | j
            gen = np.random.Generator(np.random.Philox(key=key))
            blk = gen.standard_normal(BLOCK_SIZE) * self._scale
            blk.setflags(write=False)
            # access is essentially sequential, so plain FIFO eviction keeps
            # the cache small without ever hurting a forward pass
            if len(self._blocks) >= _CACHE_BLOCKS:
                self._blocks.pop(next(iter(self._blocks)))
            self._blocks[j] = blk
        return blk

    def increment(self, index: int) -> float:
        """The fine increment W((i+1)*base_dt) - W(i*base_dt)."""
        if index < 0:
            raise ValueError(f"increment index must be >= 0, got {index}")
        return float(self._block(index // BLOCK_SIZE)[index % BLOCK_SIZE])

    def increments(self, index: int, count: int) -> np.ndarray:
        """Fine increments for steps [index, index + count)."""
        if index < 0 or count < 0:
            raise ValueError("index and count must be nonnegative")
        out = np.empty(count)
        filled = 0
        i = index
        while filled < count:
            blk = self._block(i // BLOCK_SIZE)
            off = i % BLOCK_SIZE
            take = min(BLOCK_SIZE - off, count - filled)
            out[filled : filled + take] = blk[off : off + take]
            filled += take
            i += take
        return out

    def increment_sum(self, index: int, count: int) -> float:
        """Coarse increment over ``count`` fine steps.

        Defined as the left-to-right sum of the fine increments, so it is
        exactly the value a consumer at base resolution would accumulate.
        """
        if count == 1:
            return self.increment(index)
        # cumsum accumulates strictly left to right, so its last entry is
        # bitwise identical to a sequential fold over the fine draws
        return float(np.cumsum(self.increments(index, count))[-1])

    def __repr__(self) -> str:
        return f"NoiseSource(seed={self.seed}, base_dt={self.base_dt})"
