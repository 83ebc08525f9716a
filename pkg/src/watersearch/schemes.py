"""Logit processors: soft/hard green-list biasing and the sampling step.

``apply_scheme`` is the whole watermark at the distribution level: soft adds
delta to green logits, hard clamps red logits to the -1e9 floor (the
delta -> infinity limit, kept as a clamp so every scheme shares one sampling
path), and ``none`` is the identity.  ``watermarked_step`` composes
position seed -> green mask -> bias -> softmax -> sample for one token.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, InputError
from .keys import WatermarkConfig, green_mask, position_seed
from .models import NEG_INF_LOGIT, TokenModel, sample, softmax
from .rng import SplitMix64


def apply_scheme(logits: np.ndarray, mask: np.ndarray, config: WatermarkConfig) -> np.ndarray:
    if logits.shape != mask.shape:
        raise InputError(
            f"logits length {logits.shape} does not match mask length {mask.shape}"
        )
    if config.scheme == "none" or config.delta == 0 and config.scheme != "hard":
        return logits
    out = logits.astype(float, copy=True)
    if config.scheme == "hard":
        out[~mask] = NEG_INF_LOGIT
    else:  # soft, unigram, window-min: all bias green logits by delta
        out[mask] += config.delta
    return out


def watermarked_step(
    model: TokenModel,
    context_ids: list[int],
    chunk_seed: int,
    config: WatermarkConfig,
    rng: SplitMix64,
    greedy: bool = False,
) -> int:
    """Sample one token under the configured scheme.

    With ``scheme="none"`` this is plain sampling from the model.  The
    context must supply at least h tokens; generation always starts from a
    prompt of at least h tokens, so shorter contexts indicate a caller bug.
    """
    logits = model.logits(context_ids)
    if config.scheme != "none":
        if len(context_ids) < config.h:
            raise InputError(
                f"context has {len(context_ids)} tokens but h={config.h}"
            )
        seed = position_seed(context_ids[-config.h:], chunk_seed, config)
        mask = green_mask(seed, config.gamma, model.vocab.size)
        logits = apply_scheme(logits, mask, config)
    return sample(softmax(logits), rng, greedy=greedy)


def generate_chunk(
    model: TokenModel,
    context_ids: list[int],
    chunk_seed: int,
    config: WatermarkConfig,
    rng: SplitMix64,
    max_len: int,
    greedy: bool = False,
) -> tuple[list[int], bool]:
    """Generate up to ``max_len`` tokens; returns (tokens, hit_end_of_sequence).

    An emitted end-of-sequence token terminates the chunk and is not part of
    the returned tokens.
    """
    eos = model.vocab.eos_id
    ctx = list(context_ids)
    out: list[int] = []
    for _ in range(max_len):
        tid = watermarked_step(model, ctx, chunk_seed, config, rng, greedy=greedy)
        if eos is not None and tid == eos:
            return out, True
        out.append(tid)
        ctx.append(tid)
    return out, False


def baseline_generate(
    model: TokenModel,
    prompt_ids: list[int],
    config: WatermarkConfig,
    max_tokens: int,
    rng: SplitMix64,
) -> list[int]:
    """Single-seed baseline: the classic biased sampler without search.

    Every position uses the master key as its chunk seed, which is the
    head-to-head comparison point for the search-based generator.
    """
    if len(prompt_ids) < config.h:
        raise InputError(
            f"prompt has {len(prompt_ids)} tokens but h={config.h}"
        )
    if config.scheme == "none":
        raise ConfigError("baseline generation requires a watermarking scheme")
    tokens, _ = generate_chunk(
        model, prompt_ids, config.master_key, config, rng, max_tokens
    )
    return tokens
