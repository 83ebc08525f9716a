"""Seeded green-list text watermarking with chunked candidate search.

Generation biases a pluggable next-token model toward a keyed green list,
searches k parallel continuations per chunk, and commits the candidate that
best balances similarity to the unwatermarked reference against green-token
density.  Detection replays the key's seed schedule, tests each chunk's
maximum green count against a max-of-binomials null, and combines chunk
p-values with Fisher's method.
"""

__version__ = "0.1.0"

from .attacks import SynonymDictionary, delete_attack, insert_attack, synonym_attack
from .detect import (
    DetectionReport,
    baseline_zscore,
    detect_chunk,
    detect_document,
)
from .errors import (
    ConfigError,
    DomainError,
    InputError,
    TrainingError,
    WatersearchError,
)
from .keys import SeedPool, WatermarkConfig, green_mask, is_green, token_seed
from .metrics import (
    SimilarityKind,
    bow_cosine,
    green_fraction,
    lcs_length,
    rouge_l,
    selection_score,
)
from .models import NGramModel, ScriptedModel, sample, softmax, train_ngram
from .rng import SplitMix64
from .schemes import apply_scheme, baseline_generate, watermarked_step
from .search import GenerationTrace, SearchConfig, watersearch_generate
from .stats import (
    ChunkTestParams,
    binom_cdf,
    chisq_sf,
    chunk_pvalue,
    fisher_combine,
    max_binom_cdf,
)
from .theory import TradeoffFamily, theorem_omega, verify_theorem
from .vocab import Vocabulary, detokenize, tokenize

__all__ = [
    "ChunkTestParams",
    "ConfigError",
    "DetectionReport",
    "DomainError",
    "GenerationTrace",
    "InputError",
    "NGramModel",
    "ScriptedModel",
    "SearchConfig",
    "SeedPool",
    "SimilarityKind",
    "SplitMix64",
    "SynonymDictionary",
    "TradeoffFamily",
    "TrainingError",
    "Vocabulary",
    "WatermarkConfig",
    "WatersearchError",
    "apply_scheme",
    "baseline_generate",
    "baseline_zscore",
    "binom_cdf",
    "bow_cosine",
    "chisq_sf",
    "chunk_pvalue",
    "delete_attack",
    "detect_chunk",
    "detect_document",
    "detokenize",
    "fisher_combine",
    "green_fraction",
    "green_mask",
    "insert_attack",
    "is_green",
    "lcs_length",
    "max_binom_cdf",
    "rouge_l",
    "sample",
    "selection_score",
    "softmax",
    "synonym_attack",
    "theorem_omega",
    "token_seed",
    "train_ngram",
    "verify_theorem",
    "watermarked_step",
    "watersearch_generate",
    "tokenize",
]
