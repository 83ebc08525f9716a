"""Token-level perturbation attacks for robustness measurements.

Attack strength is the per-token operation rate; every attack edits exactly
floor(rate * n) positions and never emits a token outside the vocabulary it
was given.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable

from .errors import ConfigError, InputError
from .rng import SplitMix64
from .vocab import Vocabulary


class SynonymDictionary:
    """token -> nonempty list of replacement tokens."""

    def __init__(self, entries: dict[str, list[str]], vocab: Vocabulary | None = None):
        for tok, syns in entries.items():
            if not syns:
                raise ConfigError(f"empty synonym list for {tok!r}")
            if vocab is not None:
                for s in syns:
                    if s not in vocab.index:
                        raise ConfigError(f"synonym {s!r} not in vocabulary")
        self.entries = {tok: list(syns) for tok, syns in entries.items()}

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in sorted(self.entries):
                fh.write(f"{tok}\t{','.join(self.entries[tok])}\n")

    @classmethod
    def load(cls, path: str, vocab: Vocabulary | None = None) -> "SynonymDictionary":
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                tok, _, syns = line.partition("\t")
                entries[tok] = [s for s in syns.split(",") if s]
        return cls(entries, vocab)

    @classmethod
    def from_cooccurrence(
        cls,
        documents: Iterable[list[str]],
        vocab: Vocabulary,
        window: int = 2,
        top: int = 3,
    ) -> "SynonymDictionary":
        """Self-contained stand-in dictionary: nearest co-occurring tokens.

        Not linguistically meaningful, but drawn from the same vocabulary
        and distribution as the corpus, which is all the robustness
        harness needs.
        """
        co: dict[str, Counter] = {}
        for doc in documents:
            for i, tok in enumerate(doc):
                ctr = co.setdefault(tok, Counter())
                for j in range(max(0, i - window), min(len(doc), i + window + 1)):
                    if j != i and doc[j] != tok:
                        ctr[doc[j]] += 1
        entries = {}
        for tok, ctr in co.items():
            # Sort by (-count, token) so ties do not depend on dict order.
            best = sorted(ctr.items(), key=lambda kv: (-kv[1], kv[0]))[:top]
            if best:
                entries[tok] = [t for t, _ in best]
        return cls(entries, vocab)


def _check_rate(rate: float, allow_one: bool = True) -> None:
    if allow_one:
        if not 0.0 <= rate <= 1.0:
            raise InputError(f"rate must lie in [0,1], got {rate}")
    elif not 0.0 <= rate < 1.0:
        raise InputError(f"rate must lie in [0,1), got {rate}")


def insert_attack(
    tokens: list[str], rate: float, vocab: Vocabulary, rng: SplitMix64
) -> list[str]:
    """Insert floor(rate*n) uniformly drawn vocabulary tokens at uniform spots."""
    _check_rate(rate)
    out = list(tokens)
    for _ in range(int(rate * len(tokens))):
        pos = rng.next_below(len(out) + 1)
        tok = vocab.tokens[rng.next_below(vocab.size)]
        out.insert(pos, tok)
    return out


def synonym_attack(
    tokens: list[str], rate: float, dictionary: SynonymDictionary, rng: SplitMix64
) -> list[str]:
    """Replace tokens at floor(rate*n) distinct positions with synonyms.

    Positions are drawn without replacement; a selected token with no
    dictionary entry is left unchanged but still consumes its slot.
    """
    _check_rate(rate)
    n = len(tokens)
    count = int(rate * n)
    positions = _sample_without_replacement(n, count, rng)
    out = list(tokens)
    for pos in positions:
        syns = dictionary.entries.get(out[pos])
        if syns:
            out[pos] = syns[rng.next_below(len(syns))]
    return out


def delete_attack(tokens: list[str], rate: float, rng: SplitMix64) -> list[str]:
    """Remove floor(rate*n) uniformly chosen positions; must leave >= 1 token."""
    _check_rate(rate, allow_one=False)
    n = len(tokens)
    count = int(rate * n)
    if n - count < 1:
        raise InputError(f"deleting {count} of {n} tokens would empty the text")
    doomed = set(_sample_without_replacement(n, count, rng))
    return [t for i, t in enumerate(tokens) if i not in doomed]


def _sample_without_replacement(n: int, count: int, rng: SplitMix64) -> list[int]:
    """First ``count`` entries of a stream-driven partial Fisher-Yates."""
    idx = list(range(n))
    for i in range(count):
        j = i + rng.next_below(n - i)
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:count]
