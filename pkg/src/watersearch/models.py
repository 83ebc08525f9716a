"""Toy next-token models: a trained n-gram and a scripted mock.

Both expose the same contract, ``logits(context_ids) -> vector over the
vocabulary`` with ``softmax(logits)`` equal to the model's conditional
distribution, so the watermark machinery never needs a neural network.
Models are immutable once built and safe to share across workers.
"""

from __future__ import annotations

import io
from typing import Iterable, Protocol

import numpy as np

from .errors import ConfigError, InputError, TrainingError
from .rng import SplitMix64
from .vocab import Vocabulary

NEG_INF_LOGIT = -1e9  # finite floor so delta-biasing never produces NaN


class TokenModel(Protocol):
    vocab: Vocabulary

    def logits(self, context_ids: list[int]) -> np.ndarray: ...


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def sample(probs: np.ndarray, rng: SplitMix64, greedy: bool = False) -> int:
    """Draw a token id from ``probs``; greedy takes the lowest-index argmax."""
    total = float(np.sum(probs))
    if abs(total - 1.0) > 1e-9:
        raise InputError(f"probabilities sum to {total}, not 1")
    if greedy:
        return int(np.argmax(probs))
    u = rng.next_float()
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, len(probs) - 1)


class NGramModel:
    """Add-k smoothed n-gram: P(t | ctx) = (count + k) / (total + k * |V|).

    ``counts`` maps each seen context tuple of length ``order`` to a sparse
    {token_id: count} dict.  Unseen contexts (including contexts shorter
    than ``order``) fall back to the uniform smoothed distribution.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        order: int,
        smoothing_k: float,
        counts: dict[tuple[int, ...], dict[int, int]],
    ):
        if order < 1:
            raise ConfigError(f"order must be >= 1, got {order}")
        if smoothing_k < 0:
            raise ConfigError(f"smoothing_k must be >= 0, got {smoothing_k}")
        self.vocab = vocab
        self.order = order
        self.smoothing_k = smoothing_k
        self.counts = counts
        self._totals = {ctx: sum(c.values()) for ctx, c in counts.items()}

    def probs(self, context_ids: list[int]) -> np.ndarray:
        v = self.vocab.size
        k = self.smoothing_k
        ctx = tuple(context_ids[-self.order:]) if len(context_ids) >= self.order else None
        seen = self.counts.get(ctx) if ctx is not None else None
        if not seen:
            # Unseen context: all counts zero.  With k = 0 the smoothed form
            # is 0/0; uniform is the only consistent completion.
            return np.full(v, 1.0 / v)
        denom = self._totals[ctx] + k * v
        p = np.full(v, k / denom)
        for tid, c in seen.items():
            p[tid] += c / denom
        return p

    def logits(self, context_ids: list[int]) -> np.ndarray:
        for tid in context_ids:
            if not 0 <= tid < self.vocab.size:
                raise InputError(f"token id out of range: {tid}")
        p = self.probs(context_ids)
        out = np.full(p.shape, NEG_INF_LOGIT)
        nz = p > 0.0
        out[nz] = np.log(p[nz])
        return out

    def save(self, path_or_file) -> None:
        """Line-oriented plain-text format: header, then one count per line."""
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", encoding="utf-8") if own else path_or_file
        try:
            fh.write(f"order\t{self.order}\n")
            fh.write(f"smoothing_k\t{self.smoothing_k!r}\n")
            fh.write(f"vocab\t{' '.join(self.vocab.tokens)}\n")
            for ctx in sorted(self.counts):
                row = self.counts[ctx]
                ctx_str = " ".join(str(i) for i in ctx)
                for tid in sorted(row):
                    fh.write(f"{ctx_str}\t{tid}\t{row[tid]}\n")
        finally:
            if own:
                fh.close()

    def to_bytes(self) -> bytes:
        buf = io.StringIO()
        self.save(buf)
        return buf.getvalue().encode("utf-8")

    @classmethod
    def load(cls, path_or_file) -> "NGramModel":
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, encoding="utf-8") if own else path_or_file
        try:
            header = {}
            for _ in range(3):
                key, _, value = fh.readline().rstrip("\n").partition("\t")
                header[key] = value
            missing = {"order", "smoothing_k", "vocab"} - set(header)
            if missing:
                raise InputError(f"model file missing header fields: {sorted(missing)}")
            vocab = Vocabulary(header["vocab"].split())
            counts: dict[tuple[int, ...], dict[int, int]] = {}
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                ctx_str, tid_str, count_str = line.split("\t")
                ctx = tuple(int(x) for x in ctx_str.split())
                counts.setdefault(ctx, {})[int(tid_str)] = int(count_str)
            return cls(vocab, int(header["order"]), float(header["smoothing_k"]), counts)
        finally:
            if own:
                fh.close()


def train_ngram(
    corpus: Iterable[list[str]],
    order: int,
    smoothing_k: float,
    vocab: Vocabulary | None = None,
) -> NGramModel:
    """Count order-length context windows over tokenized documents.

    Only windows fully inside a document are counted; no boundary padding is
    injected, so the conditional probabilities match hand counts over the
    raw text.
    """
    if order < 1:
        raise ConfigError(f"order must be >= 1, got {order}")
    if smoothing_k < 0:
        raise ConfigError(f"smoothing_k must be >= 0, got {smoothing_k}")
    docs = [list(doc) for doc in corpus]
    if not docs or all(not d for d in docs):
        raise TrainingError("training corpus is empty")
    if vocab is None:
        vocab = Vocabulary.from_corpus(docs)
    counts: dict[tuple[int, ...], dict[int, int]] = {}
    for doc in docs:
        ids = vocab.encode(doc)
        for i in range(order, len(ids)):
            ctx = tuple(ids[i - order : i])
            row = counts.setdefault(ctx, {})
            row[ids[i]] = row.get(ids[i], 0) + 1
    return NGramModel(vocab, order, smoothing_k, counts)


class ScriptedModel:
    """Deterministic mock: explicit logit vectors keyed by context suffix.

    Lookup tries the full context tuple first, then progressively shorter
    suffixes, then the default vector.  Useful as a test oracle: a one-hot
    script with a huge margin forces the sampled token regardless of any
    finite watermark bias.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        script: dict[tuple[int, ...], np.ndarray] | None = None,
        default: np.ndarray | None = None,
    ):
        self.vocab = vocab
        self.script = {}
        for ctx, vec in (script or {}).items():
            arr = np.asarray(vec, dtype=float)
            if arr.shape != (vocab.size,):
                raise ConfigError(
                    f"scripted logits for {ctx} have length {arr.shape[0]}, "
                    f"expected {vocab.size}"
                )
            self.script[tuple(ctx)] = arr
        if default is not None:
            default = np.asarray(default, dtype=float)
            if default.shape != (vocab.size,):
                raise ConfigError("default logits length must equal vocabulary size")
        self.default = default

    @classmethod
    def uniform(cls, vocab: Vocabulary) -> "ScriptedModel":
        return cls(vocab, default=np.zeros(vocab.size))

    def logits(self, context_ids: list[int]) -> np.ndarray:
        for tid in context_ids:
            if not 0 <= tid < self.vocab.size:
                raise InputError(f"token id out of range: {tid}")
        ctx = tuple(context_ids)
        for start in range(len(ctx) + 1):
            vec = self.script.get(ctx[start:])
            if vec is not None:
                return vec
        if self.default is not None:
            return self.default
        raise InputError(f"no scripted logits for context {ctx}")
