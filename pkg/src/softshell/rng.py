"""Seedable random number generation: PCG32 with Box-Muller normal draws.

The generator is pinned to a fully specified algorithm (PCG32, the XSH-RR
output function over a 64-bit LCG) so that every randomized stage of the
pipeline (weight init, dataset splits, batch shuffles, synthetic images)
reproduces bit-for-bit from a seed. The 32-bit integer stream is exact on
every platform; normal draws additionally pass through libm log/cos/sin and
are reproducible on a given platform.

Array draws are produced in blocks: the LCG state after k steps is an affine
function of the current state (state_k = a^k * s + inc * (1 + a + ... +
a^(k-1)) mod 2^64), so a block of successive states is one vectorized uint64
expression over precomputed power tables. Scalar draws go through the same
code path, which keeps the sequence independent of call granularity.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError

_PCG_MULT = 6364136223846793005
_MASK64 = (1 << 64) - 1
_BLOCK = 4096

# _APOW[k] = a^k mod 2^64, _ASUM[k] = 1 + a + ... + a^(k-1) mod 2^64.
_APOW = np.empty(_BLOCK + 1, dtype=np.uint64)
_ASUM = np.empty(_BLOCK + 1, dtype=np.uint64)


def _fill_tables():
    a, s = 1, 0
    for k in range(_BLOCK + 1):
        _APOW[k] = a
        _ASUM[k] = s
        s = (s + a) & _MASK64
        a = (a * _PCG_MULT) & _MASK64


_fill_tables()


class Rng:
    """PCG32 stream with a one-deep Box-Muller cache.

    `seed` selects the starting point and `stream` selects one of 2^63
    independent sequences (the LCG increment). Instances are single-caller:
    they mutate internal state on every draw.
    """

    def __init__(self, seed: int, stream: int = 0):
        self._inc = ((int(stream) << 1) | 1) & _MASK64
        self._state = 0
        self._advance()
        self._state = (self._state + int(seed)) & _MASK64
        self._advance()
        self._gauss: float | None = None

    def _advance(self):
        self._state = (self._state * _PCG_MULT + self._inc) & _MASK64

    def next_u32(self) -> int:
        return int(self.u32_block(1)[0])

    def u32_block(self, n: int) -> np.ndarray:
        """Next `n` raw 32-bit outputs as a uint32 array."""
        if n < 0:
            raise ParameterError("draw count must be nonnegative")
        out = np.empty(n, dtype=np.uint32)
        filled = 0
        with np.errstate(over="ignore"):
            while filled < n:
                m = min(n - filled, _BLOCK)
                s = np.uint64(self._state)
                inc = np.uint64(self._inc)
                olds = _APOW[:m] * s + inc * _ASUM[:m]
                self._state = int(_APOW[m] * s + inc * _ASUM[m])
                xorshifted = (((olds >> np.uint64(18)) ^ olds) >> np.uint64(27)).astype(np.uint32)
                rot = (olds >> np.uint64(59)).astype(np.uint32)
                out[filled:filled + m] = (xorshifted >> rot) | (
                    xorshifted << ((np.uint32(32) - rot) & np.uint32(31)))
                filled += m
        return out

    def uniforms(self, n: int) -> np.ndarray:
        """`n` float64 draws uniform on [0, 1)."""
        return self.u32_block(n) * 2.0 ** -32

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, n: int) -> np.ndarray:
        """`n` float64 draws from the standard normal via Box-Muller."""
        out = np.empty(n, dtype=np.float64)
        taken = 0
        if self._gauss is not None and n > 0:
            out[0] = self._gauss
            self._gauss = None
            taken = 1
        need = n - taken
        if need > 0:
            pairs = (need + 1) // 2
            raw = self.u32_block(2 * pairs).astype(np.float64)
            # (x+1)/2^32 lies in (0, 1], keeping log() finite.
            u1 = (raw[0::2] + 1.0) * 2.0 ** -32
            u2 = (raw[1::2] + 1.0) * 2.0 ** -32
            r = np.sqrt(-2.0 * np.log(u1))
            theta = (2.0 * math.pi) * u2
            z = np.empty(2 * pairs, dtype=np.float64)
            z[0::2] = r * np.cos(theta)
            z[1::2] = r * np.sin(theta)
            out[taken:] = z[:need]
            self._gauss = float(z[need]) if need < 2 * pairs else None
        return out

    def normal(self) -> float:
        return float(self.normals(1)[0])

    def randbelow(self, bound: int) -> int:
        """Uniform integer in [0, bound) without modulo bias."""
        if bound <= 0:
            raise ParameterError("bound must be positive")
        if bound > 1 << 32:
            raise ParameterError("bound exceeds the 32-bit output range")
        threshold = (1 << 32) % bound
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
