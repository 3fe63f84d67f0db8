"""Portable counter-based random streams.

Algorithm (reproducible in any language with 64-bit unsigned arithmetic):

* ``mix64(z)``: the SplitMix64 finalizer
  ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31``.
* A stream with seed ``s`` emits ``mix64(s + i * 0x9E3779B97F4A7C15)`` for
  ``i = 1, 2, ...`` (all arithmetic mod 2**64), i.e. plain SplitMix64.
* Uniform doubles are ``((z >> 11) + 0.5) * 2**-53``, strictly inside (0, 1).
* Standard normals come in Box-Muller pairs from consecutive uniforms
  ``(u1, u2)``: ``sqrt(-2 ln u1) * cos(2 pi u2)``, ``sqrt(-2 ln u1) * sin(2 pi u2)``.
* Child seeds: ``derive_seed(master, i) = mix64(mix64(master) + (i + 1) * gamma)``.
"""

import numpy as np

__all__ = ["Stream", "derive_seed", "mix64", "ALGORITHM"]

ALGORITHM = "splitmix64-counter/box-muller; seed_i = mix64(mix64(master) + (i+1)*0x9E3779B97F4A7C15)"

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def mix64(z):
    """SplitMix64 finalizer over a uint64 array (wrapping arithmetic)."""
    z = np.array(z, dtype=np.uint64, ndmin=1)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def derive_seed(master, index):
    """Seed of the ``index``-th child stream of ``master``."""
    base = int(mix64(master & _MASK)[0])
    return int(mix64((base + (index + 1) * int(GAMMA)) & _MASK)[0])


class Stream:
    """Sequential draws from one SplitMix64 stream."""

    def __init__(self, seed):
        self.seed = int(seed) & _MASK
        self.position = 0

    def uint64(self, n):
        idx = np.arange(self.position + 1, self.position + n + 1, dtype=np.uint64)
        self.position += n
        return mix64(np.uint64(self.seed) + idx * GAMMA)

    def uniform(self, n):
        z = self.uint64(n)
        return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53

    def normal(self, n):
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        radius = np.sqrt(-2.0 * np.log(u[0::2]))
        angle = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]
