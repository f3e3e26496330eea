"""Seeded pseudorandom source for simulation paths.

A SplitMix64 stream underneath, with standard normal variates produced by
the Box-Muller transform (pairs from two uniforms, zero uniforms rejected,
the spare variate cached). Implemented in-repo so simulated paths are
bit-reproducible across platforms and library versions.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53
_TWO_PI = 2.0 * math.pi


class SplitMix64:
    """Counter-based 64-bit generator (state += golden gamma, then mix)."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_uniform(self) -> float:
        """53-bit uniform in [0, 1)."""
        return (self.next_uint64() >> 11) * _INV53


class GaussianStream:
    """Standard normal draws over a seeded SplitMix64 stream."""

    __slots__ = ("_uniforms", "_spare", "_has_spare")

    def __init__(self, seed: int):
        self._uniforms = SplitMix64(seed)
        self._spare = 0.0
        self._has_spare = False

    def next_normal(self) -> float:
        if self._has_spare:
            self._has_spare = False
            return self._spare
        u1 = self._uniforms.next_uniform()
        while u1 == 0.0:  # log(0) guard; probability 2^-53 per draw
            u1 = self._uniforms.next_uniform()
        u2 = self._uniforms.next_uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = _TWO_PI * u2
        self._spare = radius * math.sin(angle)
        self._has_spare = True
        return radius * math.cos(angle)

    def draw(self, count: int) -> np.ndarray:
        out = np.empty(count)
        next_normal = self.next_normal
        for i in range(count):
            out[i] = next_normal()
        return out
