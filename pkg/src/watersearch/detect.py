"""Chunk-level and document-level watermark detection.

The document is split into fixed-size chunks by index arithmetic, the seed
pool is replayed from the master key to recover each chunk's candidate
seeds, and each chunk contributes the p-value of its maximum per-seed green
count under the max-of-binomials null.  Fisher's combination turns the
chunk p-values into one document p-value.

A position is scorable only when its h preceding tokens exist, taken from
the supplied prompt (when available) plus all document tokens before it;
unscorable positions shrink n_effective rather than biasing the test.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

from .errors import ConfigError, InputError
from .keys import WatermarkConfig, green_flags, position_seed, recover_seed_schedule
from .search import SearchConfig
from .stats import ChunkTestParams, chunk_pvalue, clamp_pvalue, fisher_combine
from .util import worker_count

REPORT_SCHEMA_VERSION = "1.0"

DEFAULT_THRESHOLD = 0.01


@dataclass
class ChunkDetection:
    chunk_index: int
    n_effective: int
    green_counts: list[int]
    z_max: int
    p_value: float


@dataclass
class DetectionReport:
    chunks: list[ChunkDetection]
    fisher_stat: float
    doc_p_value: float
    threshold: float
    verdict: bool
    gamma: float
    h: int
    beams: int
    chunk_size: int
    scheme: str
    key_fingerprint: str
    pool_size: int
    prompt_supplied: bool
    schema_version: str = REPORT_SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DetectionReport":
        payload = json.loads(text)
        version = payload.get("schema_version", "")
        if version.split(".")[0] != REPORT_SCHEMA_VERSION.split(".")[0]:
            raise InputError(f"unsupported report schema version: {version!r}")
        chunks = [ChunkDetection(**c) for c in payload.pop("chunks")]
        return cls(chunks=chunks, **payload)


def detect_chunk(
    chunk_ids: list[int],
    preceding_ids: list[int],
    seeds: list[int],
    config: WatermarkConfig,
) -> ChunkDetection:
    """Score one chunk; returns counts, max count and p-value.

    ``preceding_ids`` are all tokens before the chunk (prompt + earlier
    chunks).  Returns the per-seed green counts over scorable positions,
    their maximum Z, and P(max >= Z) under Binomial(n_effective, gamma);
    a chunk with no scorable position reports p = 1.
    """
    if not chunk_ids:
        raise InputError("cannot score an empty chunk")
    h = config.h
    scorable: list[int] = []
    windows: list[list[int]] = []
    history = list(preceding_ids)
    for tid in chunk_ids:
        if len(history) >= h:
            scorable.append(tid)
            windows.append(history[-h:])
        history.append(tid)
    n_eff = len(scorable)
    if n_eff == 0:
        return ChunkDetection(
            chunk_index=-1, n_effective=0,
            green_counts=[0] * len(seeds), z_max=0, p_value=1.0,
        )
    counts = []
    for seed in seeds:
        pos_seeds = [position_seed(w, seed, config) for w in windows]
        counts.append(int(green_flags(scorable, pos_seeds, config.gamma).sum()))
    z_max = max(counts)
    p = chunk_pvalue(z_max, ChunkTestParams(n=n_eff, p=config.gamma, s=len(seeds)))
    return ChunkDetection(
        chunk_index=-1, n_effective=n_eff,
        green_counts=counts, z_max=z_max, p_value=p,
    )


def detect_document(
    token_ids: list[int],
    prompt_ids: list[int] | None,
    wm_config: WatermarkConfig,
    search_config: SearchConfig,
    threshold: float = DEFAULT_THRESHOLD,
) -> DetectionReport:
    """Replay seeds, test every chunk, and combine the evidence.

    The threshold's open interval is widened to (0, 1] so a degenerate
    threshold of 1.0 (flag everything with p < 1) stays expressible from
    the command line.
    """
    if not token_ids:
        raise InputError("cannot detect an empty document")
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"threshold must lie in (0,1], got {threshold}")
    m = search_config.chunk_size
    count = search_config.beams - 1
    n_chunks = -(-len(token_ids) // m)
    schedule = recover_seed_schedule(
        wm_config.master_key, wm_config.pool_size, count, n_chunks
    )
    prompt = list(prompt_ids) if prompt_ids else []
    full = prompt + list(token_ids)
    offset = len(prompt)
    h = wm_config.h

    def run(i: int) -> ChunkDetection:
        chunk = token_ids[i * m : (i + 1) * m]
        start = offset + i * m
        # Only the last h preceding tokens can enter a context window.
        preceding = full[max(0, start - h) : start]
        det = detect_chunk(chunk, preceding, schedule[i], wm_config)
        det.chunk_index = i
        return det

    workers = min(worker_count(), n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, range(n_chunks)))
    else:
        chunks = [run(i) for i in range(n_chunks)]
    stat, doc_p = fisher_combine([clamp_pvalue(c.p_value) for c in chunks])
    return DetectionReport(
        chunks=chunks,
        fisher_stat=stat,
        doc_p_value=doc_p,
        threshold=threshold,
        verdict=doc_p < threshold,
        gamma=wm_config.gamma,
        h=wm_config.h,
        beams=search_config.beams,
        chunk_size=m,
        scheme=wm_config.scheme,
        key_fingerprint=wm_config.key_fingerprint(),
        pool_size=wm_config.pool_size,
        prompt_supplied=bool(prompt_ids),
    )


def baseline_zscore(
    token_ids: list[int],
    prompt_ids: list[int] | None,
    config: WatermarkConfig,
) -> float:
    """Single-seed z-statistic: (greens - gamma*T) / sqrt(gamma(1-gamma)T).

    Greenness uses the constant master-key seed path, matching the baseline
    generator.  T counts scorable positions only.
    """
    h = config.h
    history = list(prompt_ids) if prompt_ids else []
    scorable = []
    windows = []
    for tid in token_ids:
        if len(history) >= h:
            scorable.append(tid)
            windows.append(history[-h:])
        history.append(tid)
    t = len(scorable)
    if t == 0:
        raise InputError("no scorable tokens for the z-statistic")
    pos_seeds = [position_seed(w, config.master_key, config) for w in windows]
    greens = int(green_flags(scorable, pos_seeds, config.gamma).sum())
    gamma = config.gamma
    return (greens - gamma * t) / math.sqrt(gamma * (1.0 - gamma) * t)


def normal_sf(z: float) -> float:
    """Upper tail of the standard normal, for turning z-scores into p-values."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))
