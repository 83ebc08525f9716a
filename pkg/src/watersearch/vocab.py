"""Vocabulary and the shared whitespace tokenizer.

All modules (model, metrics, attacks, detector) must agree on token
identity, so the tokenizer lives here and nowhere else: lowercase, split on
whitespace.  It is injective on any vocabulary whose tokens contain no
whitespace, which the file loader enforces, so space-joining and re-splitting
round-trips exactly.
"""

from __future__ import annotations

from typing import Iterable

from .errors import ConfigError, InputError
from .rng import MASK64, mix64

EOS_TOKEN = "</s>"


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def detokenize(tokens: Iterable[str]) -> str:
    return " ".join(tokens)


class Vocabulary:
    """An ordered list of distinct token strings with stable ids 0..size-1."""

    def __init__(self, tokens: Iterable[str]):
        self.tokens = list(tokens)
        if len(self.tokens) < 2:
            raise ConfigError("vocabulary needs at least 2 tokens")
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ConfigError("vocabulary tokens must be distinct")
        for tok in self.tokens:
            if tok != "".join(tok.split()) or not tok:
                raise ConfigError(f"token contains whitespace or is empty: {tok!r}")
        self.eos_id = self.index.get(EOS_TOKEN)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_corpus(cls, documents: Iterable[list[str]], add_eos: bool = False) -> "Vocabulary":
        """Build a vocabulary from tokenized documents, ids in sorted order."""
        seen = set()
        for doc in documents:
            seen.update(doc)
        tokens = sorted(seen)
        if add_eos and EOS_TOKEN not in seen:
            tokens.append(EOS_TOKEN)
        return cls(tokens)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        try:
            return [self.index[t] for t in tokens]
        except KeyError as exc:
            raise InputError(f"token not in vocabulary: {exc.args[0]!r}") from exc

    def encode_extended(self, tokens: Iterable[str]) -> list[int]:
        """Encode, mapping out-of-vocabulary tokens to stable surrogate ids.

        Surrogates live above ``size`` so they can never be produced by the
        models, but they hash like any other id, so detection of externally
        edited text (paraphrases, foreign words) stays well defined: an
        unknown token is green with probability gamma under any seed.
        """
        out = []
        for t in tokens:
            i = self.index.get(t)
            if i is None:
                i = self.size + _string_hash(t)
            out.append(i)
        return out

    def decode(self, ids: Iterable[int]) -> list[str]:
        toks = []
        for i in ids:
            if not 0 <= i < len(self.tokens):
                raise InputError(f"token id out of range: {i}")
            toks.append(self.tokens[i])
        return toks

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls([line.strip() for line in fh if line.strip()])

    def fingerprint(self) -> str:
        """Order-sensitive 64-bit digest of the token list, as hex."""
        acc = mix64(len(self.tokens))
        for tok in self.tokens:
            acc = mix64(acc ^ _string_hash(tok))
        return f"{acc:016x}"


def _string_hash(s: str) -> int:
    """Stable 64-bit hash of a string (mix64-folded UTF-8 bytes)."""
    acc = 0x6A09E667F3BCC908  # arbitrary nonzero start
    for b in s.encode("utf-8"):
        acc = mix64((acc ^ b) + 0xFF51AFD7ED558CCD & MASK64)
    return acc
