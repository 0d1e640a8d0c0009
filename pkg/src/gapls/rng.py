"""Portable seeded normal variates: SplitMix64 words turned into normals by Box-Muller.

The stream is fully specified so that any implementation can reproduce it:

* word ``i`` (i = 0, 1, 2, ...) of seed ``s`` is ``mix(s + (i + 1) * 0x9E3779B97F4A7C15 mod 2^64)``
  with the SplitMix64 finalizer
  ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31``;
* a word becomes a uniform via its top 53 bits: ``u = (w >> 11) * 2^-53`` in [0, 1);
* normals come in pairs from two consecutive uniforms ``(u1, u2)``:
  ``rho = sqrt(-2 ln(1 - u1))``, ``z0 = rho cos(2 pi u2)``, ``z1 = rho sin(2 pi u2)``.
  A request for an odd count still consumes a full pair and drops ``z1`` of the last pair.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SplitMix64"]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-based SplitMix64 stream.

    >>> g = SplitMix64(0)
    >>> hex(int(g.next_uint64(1)[0]))
    '0xe220a8397b1dcdaf'
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.position = 0

    def next_uint64(self, count: int) -> np.ndarray:
        idx = np.arange(self.position + 1, self.position + count + 1, dtype=np.uint64)
        self.position += count
        with np.errstate(over="ignore"):
            return _mix(np.uint64(self.seed) + idx * _GAMMA)

    def uniform(self, count: int) -> np.ndarray:
        """Uniform doubles in [0, 1)."""
        return (self.next_uint64(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def standard_normal(self, shape) -> np.ndarray:
        """Standard normals filled in C (row-major) order."""
        size = int(np.prod(shape))
        pairs = (size + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        rho = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = rho * np.cos(theta)
        z[:, 1] = rho * np.sin(theta)
        return z.reshape(-1)[:size].reshape(shape)
