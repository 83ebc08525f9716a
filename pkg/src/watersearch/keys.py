"""Key material: the seed pool, per-position seeds, and green membership.

This is the part of the scheme that must agree bit-for-bit between
generation and detection.  Three layers:

* a key-shuffled seed pool handing out ``count`` seeds per chunk, replayable
  from (master_key, chunk_index) alone;
* a per-position seed folding the previous ``h`` token ids into the chunk
  seed, ``(chunk_seed * prod(id_j + 1)) mod M`` with M prime.  The ``+1``
  shift keeps token id 0 from zeroing the product;
* membership: a token is green iff a hash of (position seed, token id)
  falls below gamma.  The hash test makes green indicators exactly i.i.d.
  Bernoulli(gamma) under the null, which is what the binomial chunk test
  assumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from threading import Lock

import numpy as np

from .errors import ConfigError
from .rng import MASK64, SplitMix64, mix64, mix64_array, splitmix64, splitmix64_array

SCHEMES = ("none", "hard", "soft", "unigram", "window-min")

DEFAULT_MODULUS = (1 << 61) - 1  # Mersenne prime
DEFAULT_POOL_SIZE = 5000
DEFAULT_MASTER_KEY = 41


def _is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all 64-bit integers."""
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class WatermarkConfig:
    """Everything needed to reproduce a vocabulary partition."""

    gamma: float = 0.25
    delta: float = 4.0
    scheme: str = "soft"
    h: int = 1
    master_key: int = DEFAULT_MASTER_KEY
    modulus: int = DEFAULT_MODULUS
    pool_size: int = DEFAULT_POOL_SIZE

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in (0,1), got {self.gamma}")
        if self.delta < 0:
            raise ConfigError(f"delta must be >= 0, got {self.delta}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.h < 1:
            raise ConfigError(f"context width h must be >= 1, got {self.h}")
        if self.pool_size < 1:
            raise ConfigError(f"pool_size must be >= 1, got {self.pool_size}")
        if self.modulus <= self.pool_size:
            raise ConfigError("modulus must exceed pool_size")
        if not _is_prime(self.modulus):
            raise ConfigError(f"modulus must be prime, got {self.modulus}")

    def key_fingerprint(self) -> str:
        """Non-reversible identifier of the master key for report echoes."""
        return f"{mix64(self.master_key):016x}"


class SeedPool:
    """Key-shuffled pool of chunk seeds (single-owner, mutable session state).

    The pool starts as [1..pool_size]; each ``next_chunk_seeds`` call runs
    one Fisher-Yates pass driven by a persistent SplitMix64 stream seeded
    from the master key, then returns the first ``count`` entries.  Shuffles
    compose, so the full history is determined by (master_key, chunk_index).
    """

    def __init__(self, master_key: int, pool_size: int = DEFAULT_POOL_SIZE):
        if pool_size < 1:
            raise ConfigError(f"pool_size must be >= 1, got {pool_size}")
        self.pool = list(range(1, pool_size + 1))
        self._stream = SplitMix64(master_key)
        self.chunk_index = 0

    @property
    def pool_size(self) -> int:
        return len(self.pool)

    def next_chunk_seeds(self, count: int) -> list[int]:
        if count > len(self.pool):
            raise ConfigError(
                f"requested {count} seeds from a pool of {len(self.pool)}"
            )
        self._stream.shuffle(self.pool)
        self.chunk_index += 1
        return self.pool[:count]


_schedule_lock = Lock()
_schedule_cache: dict[tuple[int, int, int], tuple[SeedPool, list[list[int]]]] = {}


def recover_seed_schedule(
    master_key: int, pool_size: int, count: int, n_chunks: int
) -> list[list[int]]:
    """Seeds for chunks 0..n_chunks-1, as detection replays them.

    Detection of many documents under one key replays the same shuffle
    history, so the schedule is memoized per (key, pool size, count) and
    extended lazily.
    """
    key = (master_key, pool_size, count)
    with _schedule_lock:
        entry = _schedule_cache.get(key)
        if entry is None:
            entry = (SeedPool(master_key, pool_size), [])
            _schedule_cache[key] = entry
        pool, schedule = entry
        while len(schedule) < n_chunks:
            schedule.append(pool.next_chunk_seeds(count))
        return [list(s) for s in schedule[:n_chunks]]


def token_seed(prev_ids: list[int], chunk_seed: int, modulus: int) -> int:
    """Per-position seed: (chunk_seed * prod(id + 1)) mod M, stepwise."""
    s = chunk_seed % modulus
    for tid in prev_ids:
        s = s * ((tid + 1) % modulus) % modulus
    return s


def _window_min_hash(tid: int, modulus: int) -> int:
    # Nonzero per-token hash in [1, M): zero would collapse the product.
    return mix64(tid + 1) % (modulus - 1) + 1


def position_seed(prev_ids: list[int], chunk_seed: int, config: WatermarkConfig) -> int:
    """Scheme-aware per-position seed from the last h token ids.

    ``none``/``soft``/``hard`` use the product hash; ``unigram`` ignores
    both context and chunk seed (one fixed partition per key); and
    ``window-min`` replaces the context product with the minimum of
    per-token hashes over the window.
    """
    if config.scheme == "unigram":
        return config.master_key % config.modulus
    if config.scheme == "window-min":
        m = min(_window_min_hash(t, config.modulus) for t in prev_ids)
        return (chunk_seed % config.modulus) * m % config.modulus
    return token_seed(prev_ids, chunk_seed, config.modulus)


def _green_threshold(gamma: float) -> int:
    if gamma >= 1.0:
        return 1 << 64
    if gamma <= 0.0:
        return 0
    return int(gamma * 2**64)


def is_green(token_id: int, seed: int, gamma: float) -> bool:
    """Membership test: hash(seed, token id) below the gamma cut."""
    return splitmix64((seed & MASK64) ^ mix64(token_id)) < _green_threshold(gamma)


_aval_cache: dict[int, np.ndarray] = {}


def _id_avalanche(vocab_size: int) -> np.ndarray:
    table = _aval_cache.get(vocab_size)
    if table is None:
        table = mix64_array(np.arange(vocab_size, dtype=np.uint64))
        _aval_cache[vocab_size] = table
    return table


def green_mask(seed: int, gamma: float, vocab_size: int) -> np.ndarray:
    """Boolean green membership for every id in one call.

    Bit-identical to mapping :func:`is_green` over range(vocab_size).
    """
    hashed = splitmix64_array(
        np.full(vocab_size, seed & MASK64, dtype=np.uint64) ^ _id_avalanche(vocab_size)
    )
    threshold = _green_threshold(gamma)
    if threshold >= 1 << 64:
        return np.ones(vocab_size, dtype=bool)
    return hashed < np.uint64(threshold)


def green_flags(token_ids: list[int], seeds: list[int], gamma: float) -> np.ndarray:
    """Vectorized :func:`is_green` over aligned (token, seed) pairs."""
    ids = np.asarray(
        [mix64(t) for t in token_ids], dtype=np.uint64
    )
    seed_arr = np.asarray([s & MASK64 for s in seeds], dtype=np.uint64)
    hashed = splitmix64_array(seed_arr ^ ids)
    threshold = _green_threshold(gamma)
    if threshold >= 1 << 64:
        return np.ones(len(token_ids), dtype=bool)
    return hashed < np.uint64(threshold)
