"""Evaluation harness: detectability rates, ROC sweeps, null calibration.

Every trial derives its own PRNG substream from (rng seed, trial index), so
fanning trials across a worker pool cannot change any result; rows are
sorted by trial id before aggregation either way.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .corpus import Corpus
from .detect import detect_document
from .errors import InputError
from .keys import WatermarkConfig
from .models import TokenModel
from .rng import SplitMix64, derive_seed
from .search import SearchConfig, watersearch_generate
from .schemes import generate_chunk
from .util import worker_count


@dataclass
class EvalResult:
    """Aggregate detection quality of one configuration."""

    label: str
    trials: int
    threshold: float
    tpr: float
    tnr: float
    median_watermarked_p: float
    mean_similarity: float
    mean_green_fraction: float
    roc: list[tuple[float, float]]
    seconds_per_1000_tokens: float


def _median(values: list[float]) -> float:
    xs = sorted(values)
    n = len(xs)
    if n == 0:
        return math.nan
    mid = n // 2
    return xs[mid] if n % 2 else (xs[mid - 1] + xs[mid]) / 2.0


def roc_points(
    watermarked_p: list[float], clean_p: list[float]
) -> list[tuple[float, float]]:
    """(FPR, TPR) pairs from a sweep over every distinct p-value threshold."""
    points = [(0.0, 0.0)]
    for thr in sorted(set(watermarked_p) | set(clean_p)):
        tpr = sum(p <= thr for p in watermarked_p) / len(watermarked_p)
        fpr = sum(p <= thr for p in clean_p) / len(clean_p)
        points.append((fpr, tpr))
    points.append((1.0, 1.0))
    out = []
    for pt in points:
        if not out or pt != out[-1]:
            out.append(pt)
    return out


def _map_trials(fn, n: int) -> list:
    workers = min(worker_count(), n) if n else 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(n)))
    return [fn(i) for i in range(n)]


def evaluate_config(
    model: TokenModel,
    corpus: Corpus,
    wm_config: WatermarkConfig,
    search_config: SearchConfig,
    trials: int,
    threshold: float = 0.01,
    rng_seed: int = 0,
    label: str = "",
) -> EvalResult:
    """Generate + detect ``trials`` watermarked and clean texts.

    Clean texts come from the same model with no watermark, so the TNR
    measures the detector against realistic model output rather than
    against noise.
    """
    if trials < 1:
        raise InputError("need at least one trial")
    prompts = [doc.prompt for doc in corpus]
    if not prompts:
        raise InputError("corpus has no documents")
    plain = replace(wm_config, scheme="none")

    def one_trial(i: int) -> tuple[float, float, float, float, int, float]:
        prompt_ids = model.vocab.encode(prompts[i % len(prompts)])
        t0 = time.perf_counter()
        out_ids, trace = watersearch_generate(
            model, prompt_ids, wm_config, search_config,
            rng_seed=derive_seed(rng_seed, 2 * i),
        )
        elapsed = time.perf_counter() - t0
        wm_report = detect_document(out_ids, prompt_ids, wm_config, search_config, threshold)
        clean_rng = SplitMix64(derive_seed(rng_seed, 2 * i + 1))
        clean_ids, _ = generate_chunk(
            model, prompt_ids, 0, plain, clean_rng, search_config.max_tokens
        )
        chosen = [rec for rec in trace.chunks]
        sim = (
            sum(r.similarities[r.chosen_index] for r in chosen) / len(chosen)
            if chosen else math.nan
        )
        gf = (
            sum(r.green_fractions[r.chosen_index] for r in chosen) / len(chosen)
            if chosen else math.nan
        )
        clean_p = 1.0
        if clean_ids:
            clean_report = detect_document(
                clean_ids, prompt_ids, wm_config, search_config, threshold
            )
            clean_p = clean_report.doc_p_value
        return wm_report.doc_p_value, clean_p, sim, gf, len(out_ids), elapsed

    rows = _map_trials(one_trial, trials)
    wm_p = [r[0] for r in rows]
    clean_p = [r[1] for r in rows]
    sims = [r[2] for r in rows if not math.isnan(r[2])]
    gfs = [r[3] for r in rows if not math.isnan(r[3])]
    tokens = sum(r[4] for r in rows)
    seconds = sum(r[5] for r in rows)
    return EvalResult(
        label=label,
        trials=trials,
        threshold=threshold,
        tpr=sum(p < threshold for p in wm_p) / trials,
        tnr=sum(p >= threshold for p in clean_p) / trials,
        median_watermarked_p=_median(wm_p),
        mean_similarity=sum(sims) / len(sims) if sims else math.nan,
        mean_green_fraction=sum(gfs) / len(gfs) if gfs else math.nan,
        roc=roc_points(wm_p, clean_p),
        seconds_per_1000_tokens=1000.0 * seconds / tokens if tokens else math.nan,
    )


def simulate_null(
    trials: int,
    doc_len: int,
    vocab_size: int,
    wm_config: WatermarkConfig,
    search_config: SearchConfig,
    rng_seed: int = 0,
    thresholds: tuple[float, ...] = (0.01, 0.05, 0.1),
) -> dict:
    """Detector behavior on uniformly random token documents.

    Returns the raw doc p-values, the empirical false-positive rate at each
    threshold, and the one-sided uniformity check (empirical CDF must not
    exceed the uniform CDF beyond sampling noise).
    """
    if trials < 1:
        raise InputError("need at least one trial")

    def one_trial(i: int) -> float:
        rng = SplitMix64(derive_seed(rng_seed, i))
        ids = [rng.next_below(vocab_size) for _ in range(doc_len)]
        report = detect_document(ids, None, wm_config, search_config)
        return report.doc_p_value

    pvals = _map_trials(one_trial, trials)
    fpr = {thr: sum(p < thr for p in pvals) / trials for thr in thresholds}
    dplus, ks_p = ks_uniform_onesided(pvals)
    return {
        "p_values": pvals,
        "fpr": fpr,
        "ks_dplus": dplus,
        "ks_pvalue": ks_p,
    }


def ks_uniform_onesided(pvals: list[float]) -> tuple[float, float]:
    """One-sided Kolmogorov-Smirnov test that the sample is not sub-uniform.

    D+ = sup_x (ECDF(x) - x) measures probability mass arriving early, i.e.
    p-values smaller than uniform would allow.  The returned p-value is the
    asymptotic exp(-2 n D+^2); conservative (super-uniform) samples give
    D+ near 0 and a p-value near 1.
    """
    if not pvals:
        raise InputError("empty sample")
    xs = sorted(pvals)
    n = len(xs)
    dplus = max((i + 1) / n - x for i, x in enumerate(xs))
    dplus = max(0.0, dplus)
    return dplus, math.exp(-2.0 * n * dplus * dplus)


def ks_two_sample(a: list[float], b: list[float]) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value."""
    if not a or not b:
        raise InputError("empty sample")
    xs = sorted(a)
    ys = sorted(b)
    i = j = 0
    d = 0.0
    while i < len(xs) and j < len(ys):
        if xs[i] <= ys[j]:
            i += 1
        else:
            j += 1
        d = max(d, abs(i / len(xs) - j / len(ys)))
    ne = len(xs) * len(ys) / (len(xs) + len(ys))
    return d, _kolmogorov_sf((math.sqrt(ne) + 0.12 + 0.11 / math.sqrt(ne)) * d)


def _kolmogorov_sf(t: float) -> float:
    if t <= 0:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * t * t)
        total += term
        if abs(term) < 1e-12:
            break
    return min(1.0, max(0.0, total))
