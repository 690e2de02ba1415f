"""Seeded randomness with order-independent child streams."""

import numpy as np


class Rng:
    """Deterministic random stream keyed by a 64-bit seed.

    The same seed always yields the same draw sequence regardless of host or
    scheduling. ``child(*key)`` derives an independent stream from
    (seed, key) alone, so parallel work items can be seeded without caring
    about execution order.
    """

    def __init__(self, seed: int, _spawn_key: tuple = ()):
        self.seed = int(seed)
        self._spawn_key = _spawn_key
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=_spawn_key))
        )

    def child(self, *key: int) -> "Rng":
        """Independent stream determined by (seed, existing key, new key)."""
        return Rng(self.seed, self._spawn_key + tuple(int(k) for k in key))

    def normal(self, shape, scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(0.0, scale, size=shape)

    def uniform(self, lo: float, hi: float, shape) -> np.ndarray:
        return self._gen.uniform(lo, hi, size=shape)

    def integers(self, lo: int, hi: int, shape=None) -> np.ndarray:
        return self._gen.integers(lo, hi, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)
