"""The chunked candidate-search generation loop.

Per chunk: draw k-1 seeds from the pool, generate one unwatermarked
reference chunk plus k-1 watermarked candidates from the identical prefix,
score every candidate by the weighted blend of similarity-to-reference and
own-seed green fraction, commit the argmax, repeat.  The reference is never
committed; it exists only as the comparison anchor.

Each beam consumes its own derived PRNG substream, so generating candidates
on a thread pool is bit-identical to generating them sequentially.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigError, InputError
from .keys import SeedPool, WatermarkConfig
from .metrics import SimilarityKind, green_fraction, selection_score
from .models import TokenModel
from .rng import SplitMix64, derive_seed
from .schemes import generate_chunk
from .util import worker_count

TRACE_SCHEMA_VERSION = "1.0"

_REFERENCE_BEAM = 0  # substream tag; candidate i uses tag i + 1


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the search loop."""

    chunk_size: int = 20
    beams: int = 5
    alpha: float = 0.75
    max_tokens: int = 200
    similarity: SimilarityKind = field(default_factory=SimilarityKind)

    def __post_init__(self):
        if self.chunk_size < 1:
            raise ConfigError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if self.beams < 2:
            raise ConfigError(f"beams must be >= 2, got {self.beams}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0,1], got {self.alpha}")
        if self.max_tokens < 0:
            raise ConfigError(f"max_tokens must be >= 0, got {self.max_tokens}")


@dataclass
class ChunkRecord:
    """Audit record of one search round."""

    chunk_index: int
    seeds: list[int]
    reference: list[int]
    candidates: list[list[int]]
    similarities: list[float]
    green_fractions: list[float]
    scores: list[float]
    chosen_index: int
    committed: list[int]
    ended: bool


@dataclass
class GenerationTrace:
    """Full audit record of a generation run, JSON-serializable."""

    prompt_ids: list[int]
    output_ids: list[int]
    chunks: list[ChunkRecord]
    wm_config: dict
    search_config: dict
    rng_seed: int
    vocab_fingerprint: str
    schema_version: str = TRACE_SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GenerationTrace":
        payload = json.loads(text)
        version = payload.get("schema_version", "")
        if version.split(".")[0] != TRACE_SCHEMA_VERSION.split(".")[0]:
            raise InputError(f"unsupported trace schema version: {version!r}")
        chunks = [ChunkRecord(**c) for c in payload.pop("chunks")]
        return cls(chunks=chunks, **payload)


def _beam_rng(rng_seed: int, chunk_index: int, beam: int) -> SplitMix64:
    return SplitMix64(derive_seed(rng_seed, chunk_index, beam))


def generate_candidates(
    model: TokenModel,
    context_ids: list[int],
    seeds: list[int],
    wm_config: WatermarkConfig,
    search_config: SearchConfig,
    rng_seed: int,
    chunk_index: int,
    max_len: int | None = None,
) -> tuple[list[int], bool, list[list[int]], list[bool]]:
    """One parallel round: the reference chunk and one candidate per seed.

    Returns (reference, reference_ended, candidates, candidates_ended).
    Candidate i runs the watermark scheme under seeds[i]; all beams start
    from the identical prefix and own a private PRNG substream, so results
    are independent of execution order.
    """
    if len(seeds) != search_config.beams - 1:
        raise ConfigError(
            f"expected {search_config.beams - 1} seeds, got {len(seeds)}"
        )
    if max_len is None:
        max_len = search_config.chunk_size
    plain = replace(wm_config, scheme="none")

    def run_beam(beam: int) -> tuple[list[int], bool]:
        rng = _beam_rng(rng_seed, chunk_index, beam)
        if beam == _REFERENCE_BEAM:
            return generate_chunk(model, context_ids, 0, plain, rng, max_len)
        return generate_chunk(
            model, context_ids, seeds[beam - 1], wm_config, rng, max_len
        )

    n_beams = search_config.beams
    workers = min(worker_count(), n_beams)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_beam, range(n_beams)))
    else:
        results = [run_beam(b) for b in range(n_beams)]
    reference, ref_ended = results[0]
    candidates = [tokens for tokens, _ in results[1:]]
    ended = [e for _, e in results[1:]]
    return reference, ref_ended, candidates, ended


def score_candidates(
    reference: list[int],
    candidates: list[list[int]],
    committed_ids: list[int],
    seeds: list[int],
    wm_config: WatermarkConfig,
    search_config: SearchConfig,
) -> tuple[list[float], list[float], list[float]]:
    sims = [search_config.similarity.score(reference, c) for c in candidates]
    gfs = [
        green_fraction(c, committed_ids, s, wm_config)
        for c, s in zip(candidates, seeds)
    ]
    scores = [
        selection_score(sim, gf, search_config.alpha) for sim, gf in zip(sims, gfs)
    ]
    return sims, gfs, scores


def select_best(scores: list[float]) -> int:
    """Argmax with ties broken toward the lowest index."""
    if not scores:
        raise InputError("no candidates to select from")
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


def watersearch_generate(
    model: TokenModel,
    prompt_ids: list[int],
    wm_config: WatermarkConfig,
    search_config: SearchConfig,
    rng_seed: int = 0,
) -> tuple[list[int], GenerationTrace]:
    """Generate up to max_tokens watermarked tokens from the prompt.

    Loops ceil(max_tokens / chunk_size) rounds, committing the best
    watermarked candidate each round; stops early only when the committed
    chunk hit end-of-sequence.  Returns the output ids and the full trace.
    """
    if len(prompt_ids) < wm_config.h:
        raise InputError(
            f"prompt has {len(prompt_ids)} tokens but h={wm_config.h}"
        )
    m = search_config.chunk_size
    total = search_config.max_tokens
    pool = SeedPool(wm_config.master_key, wm_config.pool_size)
    context = list(prompt_ids)
    output: list[int] = []
    records: list[ChunkRecord] = []
    n_chunks = -(-total // m)  # ceil
    for chunk_index in range(n_chunks):
        budget = min(m, total - len(output))
        seeds = pool.next_chunk_seeds(search_config.beams - 1)
        reference, _, candidates, ended = generate_candidates(
            model, context, seeds, wm_config, search_config,
            rng_seed, chunk_index, max_len=budget,
        )
        sims, gfs, scores = score_candidates(
            reference, candidates, context, seeds, wm_config, search_config
        )
        chosen = select_best(scores)
        committed = candidates[chosen]
        records.append(
            ChunkRecord(
                chunk_index=chunk_index,
                seeds=list(seeds),
                reference=list(reference),
                candidates=[list(c) for c in candidates],
                similarities=sims,
                green_fractions=gfs,
                scores=scores,
                chosen_index=chosen,
                committed=list(committed),
                ended=ended[chosen],
            )
        )
        context.extend(committed)
        output.extend(committed)
        if ended[chosen]:
            break
    trace = GenerationTrace(
        prompt_ids=list(prompt_ids),
        output_ids=output,
        chunks=records,
        wm_config=_config_dict(wm_config),
        search_config=_search_dict(search_config),
        rng_seed=rng_seed,
        vocab_fingerprint=model.vocab.fingerprint(),
    )
    return output, trace


def replay_trace(
    trace: GenerationTrace,
    wm_config: WatermarkConfig,
    search_config: SearchConfig,
) -> bool:
    """Recompute every chunk's scores and chosen index from stored tokens.

    Returns True iff the stored trace is internally consistent; the scores
    must reproduce exactly, not approximately, because the same arithmetic
    runs on the same integers.
    """
    context = list(trace.prompt_ids)
    for rec in trace.chunks:
        sims, gfs, scores = score_candidates(
            rec.reference, rec.candidates, context, rec.seeds,
            wm_config, search_config,
        )
        if sims != rec.similarities or gfs != rec.green_fractions:
            return False
        if scores != rec.scores or select_best(scores) != rec.chosen_index:
            return False
        if rec.candidates[rec.chosen_index] != rec.committed:
            return False
        context.extend(rec.committed)
    return context == list(trace.prompt_ids) + list(trace.output_ids)


def _config_dict(cfg: WatermarkConfig) -> dict:
    return {
        "gamma": cfg.gamma,
        "delta": cfg.delta,
        "scheme": cfg.scheme,
        "h": cfg.h,
        "modulus": cfg.modulus,
        "pool_size": cfg.pool_size,
        "key_fingerprint": cfg.key_fingerprint(),
    }


def _search_dict(cfg: SearchConfig) -> dict:
    return {
        "chunk_size": cfg.chunk_size,
        "beams": cfg.beams,
        "alpha": cfg.alpha,
        "max_tokens": cfg.max_tokens,
        "similarity": {"kind": cfg.similarity.kind, "beta": cfg.similarity.beta},
    }
