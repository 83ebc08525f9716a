"""Chunk quality metrics and the weighted selection score.

The similarity side compares a watermarked candidate against the
unwatermarked reference chunk from the same prefix; the detectability side
is the candidate's green fraction under its own seed, computed with exactly
the arithmetic the detector replays later.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import math

from .errors import ConfigError
from .keys import WatermarkConfig, green_flags, position_seed


def lcs_length(a: list, b: list) -> int:
    """Longest common subsequence length by the classic two-row DP."""
    if not a or not b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(ref: list, cand: list, beta: float = 1.0) -> float:
    """LCS F-measure (1 + b^2) * L / (m + b^2 * n) for ref length m, candidate n.

    Conventions at the boundary: two empty sequences are identical (1.0),
    one empty sequence shares nothing (0.0).
    """
    if beta <= 0:
        raise ConfigError(f"beta must be > 0, got {beta}")
    if not ref and not cand:
        return 1.0
    if not ref or not cand:
        return 0.0
    lcs = lcs_length(ref, cand)
    return (1.0 + beta * beta) * lcs / (len(ref) + beta * beta * len(cand))


def bow_cosine(a: list, b: list) -> float:
    """Cosine of term-frequency vectors, the stand-in sentence embedder."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    ca, cb = Counter(a), Counter(b)
    dot = sum(ca[t] * cb[t] for t in ca.keys() & cb.keys())
    na = math.sqrt(sum(c * c for c in ca.values()))
    nb = math.sqrt(sum(c * c for c in cb.values()))
    return dot / (na * nb)


@dataclass(frozen=True)
class SimilarityKind:
    """Which chunk similarity to use: "rouge_l" (default) or "bow_cosine"."""

    kind: str = "rouge_l"
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("rouge_l", "bow_cosine"):
            raise ConfigError(f"unknown similarity kind {self.kind!r}")
        if self.beta <= 0:
            raise ConfigError(f"beta must be > 0, got {self.beta}")

    def score(self, ref: list, cand: list) -> float:
        if self.kind == "rouge_l":
            return rouge_l(ref, cand, self.beta)
        return bow_cosine(ref, cand)


def selection_score(similarity: float, green_fraction: float, alpha: float) -> float:
    """alpha * similarity + (1 - alpha) * green fraction."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0,1], got {alpha}")
    return alpha * similarity + (1.0 - alpha) * green_fraction


def chunk_green_flags(
    chunk_ids: list[int],
    committed_ids: list[int],
    chunk_seed: int,
    config: WatermarkConfig,
) -> list[bool]:
    """Green indicator per chunk token under its own position seed.

    Position t of the chunk takes its context from the tail of
    committed_ids + chunk_ids[:t]; the committed context must supply at
    least h tokens, which generation guarantees via the prompt.
    """
    h = config.h
    if len(committed_ids) < h:
        raise ConfigError(
            f"committed context has {len(committed_ids)} tokens but h={h}"
        )
    window = list(committed_ids[-h:])
    seeds = []
    for tid in chunk_ids:
        seeds.append(position_seed(window[-h:], chunk_seed, config))
        window.append(tid)
        if len(window) > h:
            window.pop(0)
    if not chunk_ids:
        return []
    return list(green_flags(chunk_ids, seeds, config.gamma))


def green_fraction(
    chunk_ids: list[int],
    committed_ids: list[int],
    chunk_seed: int,
    config: WatermarkConfig,
) -> float:
    """Fraction of chunk tokens that are green; an empty chunk scores 0."""
    if not chunk_ids:
        return 0.0
    flags = chunk_green_flags(chunk_ids, committed_ids, chunk_seed, config)
    return sum(flags) / len(flags)
