"""Seeded integer draw streams shared by samplers, tiebreakers and the simulator.

Every random decision in the toolkit goes through :class:`DrawStream`, which
pulls raw 64-bit words from numpy's PCG64 and turns them into bounded
integers by rejection sampling::

    limit = (2**64 // n) * n
    repeat: u = next raw word
    until u < limit
    return u % n

Because only raw words are consumed, the compiled and pure-Python kernels see
exactly the same sequence of draws, and the protocol is reproducible anywhere
PCG64 is available.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_TWO64 = 1 << 64
_BATCH = 256


def derive_seed(master_seed: int, *key: int) -> int:
    """Split ``master_seed`` into an independent 64-bit sub-seed.

    Uses :class:`numpy.random.SeedSequence` with ``key`` as the spawn key, so
    ``derive_seed(s, 0, 3)`` is a pure function of its arguments.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


class DrawStream:
    """A reproducible stream of uniform integer draws."""

    def __init__(self, seed: int, key: Sequence[int] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._bitgen = np.random.PCG64(ss)
        self._buf: list[int] = []
        self._pos = 0

    def raw(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = [int(x) for x in self._bitgen.random_raw(_BATCH)]
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        if n == 1:
            return 0
        limit = (_TWO64 // n) * n
        while True:
            u = self.raw()
            if u < limit:
                return u % n

    def between(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range ``[lo, hi]``."""
        return lo + self.below(hi - lo + 1)

    def spawn(self, *key: int) -> "DrawStream":
        return DrawStream(self.seed, self.key + tuple(key))
