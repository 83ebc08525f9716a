"""Deterministic PRNG primitives: SplitMix64 streams and Fisher-Yates.

Every random decision in the toolkit flows through this module so that runs
are reproducible bit-for-bit across platforms and across thread counts.
Python's own ``random`` module is deliberately not used: its shuffle is tied
to one interpreter's Mersenne Twister, while the algorithm here is a small,
fully specified stream that can be reimplemented anywhere.

The stream is SplitMix64 (Steele, Lea & Flood): state advances by the 64-bit
golden-gamma constant and each output is an xor-shift-multiply avalanche of
the new state.  ``stream_block`` exploits the fact that the state sequence is
arithmetic, so a block of outputs is one vectorized avalanche over numpy
uint64.  Bounded draws use plain modulo; for pools below 2**16 the bias is
under 2**-48 and accepted.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB

_GOLDEN_ARR = np.uint64(GOLDEN)
_MUL1_ARR = np.uint64(_MUL1)
_MUL2_ARR = np.uint64(_MUL2)


def mix64(x: int) -> int:
    """Avalanche finalizer of SplitMix64 (a 64-bit bijection)."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MUL1) & MASK64
    x = ((x ^ (x >> 27)) * _MUL2) & MASK64
    return x ^ (x >> 31)


def splitmix64(x: int) -> int:
    """First output of a SplitMix64 stream seeded at ``x``."""
    return mix64((x + GOLDEN) & MASK64)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64` over a uint64 array (bit-identical)."""
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= _MUL1_ARR
    x ^= x >> np.uint64(27)
    x *= _MUL2_ARR
    x ^= x >> np.uint64(31)
    return x


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`splitmix64`."""
    return mix64_array(x + _GOLDEN_ARR)


def derive_seed(seed: int, *tags: int) -> int:
    """Derive an independent substream seed from ``seed`` and integer tags.

    Used to give every (chunk, beam) pair its own stream so that parallel
    and sequential candidate generation consume identical randomness.
    """
    x = mix64(seed)
    for tag in tags:
        x = mix64(((x + GOLDEN) & MASK64) ^ mix64(tag & MASK64))
    return x


class SplitMix64:
    """A sequential SplitMix64 stream with a vectorized block API."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        """Uniform draw in [0, 1) with 53 usable bits."""
        return self.next_u64() / 2**64

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) via modulo (bias accepted, see module doc)."""
        return self.next_u64() % n

    def next_block(self, count: int) -> np.ndarray:
        """The next ``count`` outputs as a uint64 array.

        Equals ``count`` sequential :meth:`next_u64` calls bit-for-bit.
        """
        steps = np.arange(1, count + 1, dtype=np.uint64)
        base = np.full(count, self.state, dtype=np.uint64)
        out = mix64_array(base + steps * _GOLDEN_ARR)
        self.state = (self.state + count * GOLDEN) & MASK64
        return out

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this stream.

        Consumes exactly ``len(items) - 1`` draws regardless of content.
        """
        n = len(items)
        if n < 2:
            return
        draws = self.next_block(n - 1)
        bounds = np.arange(n, 1, -1, dtype=np.uint64)
        js = (draws % bounds).tolist()
        i = n - 1
        for j in js:
            items[i], items[j] = items[j], items[i]
            i -= 1
