"""Reproducible counter-based random streams.

Streams wrap a Philox generator keyed by a 128-bit value derived from the
seed and the substream path, so parallel Monte Carlo replicates can each take
``stream.substream(b)`` and obtain sequences that are independent of one
another and of worker scheduling.  Identical (seed, path) always reproduces
the identical sequence.
"""

from __future__ import annotations

import hashlib

import numpy as np


class RandomStream:
    """A seeded, hierarchically splittable random stream.

    Parameters
    ----------
    seed : int
        Nonnegative base seed.

    Notes
    -----
    ``generator`` is created lazily and is stateful: drawing from it advances
    the stream.  Never share one stream between parallel tasks; derive one
    substream per task instead.
    """

    __slots__ = ("seed", "path", "_key", "_generator")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        digest = hashlib.blake2b(
            repr((self.seed, self.path)).encode(), digest_size=16
        ).digest()
        self._key = int.from_bytes(digest, "little")
        self._generator = None

    def substream(self, idx: int) -> "RandomStream":
        """Derive the child stream with index ``idx``; distinct indices give
        statistically independent streams."""
        return RandomStream(self.seed, self.path + (int(idx),))

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            self._generator = np.random.Generator(np.random.Philox(key=self._key))
        return self._generator

    def uniforms_open(self, n: int) -> np.ndarray:
        """Draw ``n`` uniforms clipped strictly inside (0, 1)."""
        u = self.generator.random(n)
        return np.clip(u, 2.0 ** -53, 1.0 - 2.0 ** -53)

    def __getstate__(self):
        return (self.seed, self.path)

    def __setstate__(self, state):
        seed, path = state
        self.__init__(seed, path)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, path={self.path})"
