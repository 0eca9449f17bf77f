"""Seeded, counter-based random streams.

Every stream is a Philox generator keyed from ``(seed, path)`` through
``numpy.random.SeedSequence``.  Substreams are addressed by an integer path,
so trial ``i`` of a batch always draws the same numbers no matter how the
batch is split across workers.
"""
from __future__ import annotations

import numpy as np

_SEED_MASK = (1 << 64) - 1


class RngStream:
    """Deterministic random stream with addressable substreams."""

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= int(seed) <= _SEED_MASK:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self._gen = None

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path})"

    def substream(self, index: int) -> "RngStream":
        if index < 0:
            raise ValueError("substream index must be non-negative")
        return RngStream(self.seed, self.path + (int(index),))

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(self.seed, spawn_key=self.path)
            key = seq.generate_state(2, np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def random(self, size=None):
        return self.generator.random(size)

    def choice_index(self, probabilities) -> int:
        """Draw an index with the given (not necessarily normalized) weights."""
        p = np.asarray(probabilities, dtype=float)
        cdf = np.cumsum(p)
        u = self.random() * cdf[-1]
        idx = int(np.searchsorted(cdf, u, side="right"))
        return min(idx, len(p) - 1)


def as_stream(rng) -> RngStream:
    """Accept an RngStream or a plain integer seed."""
    if isinstance(rng, RngStream):
        return rng
    return RngStream(int(rng))
