"""Command-line surface.

Subcommands: train-model, generate, detect, attack, evaluate, simulate-null,
theory.  Flag values override config-file values, which override defaults;
pass --config FILE with a flat JSON object to set any long flag name
(dashes may be written as underscores).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import __version__
from .attacks import SynonymDictionary, delete_attack, insert_attack, synonym_attack
from .corpus import Corpus, load_training_text
from .detect import DEFAULT_THRESHOLD, detect_document
from .errors import WatersearchError
from .evaluate import evaluate_config, simulate_null
from .keys import WatermarkConfig
from .metrics import SimilarityKind
from .models import NGramModel, train_ngram
from .rng import SplitMix64
from .schemes import baseline_generate
from .search import SearchConfig, watersearch_generate
from .theory import default_family_grid, theorem_omega, verify_theorem
from .vocab import Vocabulary, detokenize, tokenize


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    raw = list(sys.argv[1:]) if argv is None else list(argv)
    args = parser.parse_args(raw)
    _apply_config_file(args, raw)
    try:
        return args.func(args)
    except WatersearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="watersearch",
        description="Seeded green-list watermarking with chunked candidate search.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-model", help="train the toy n-gram model")
    p.add_argument("--corpus", required=True, help="plain text, one document per line")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--smoothing-k", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_model)

    p = sub.add_parser("generate", help="generate watermarked text")
    p.add_argument("--model", required=True)
    p.add_argument("--prompt", help="prompt text (token string)")
    p.add_argument("--corpus", help="JSONL corpus to take the prompt from")
    p.add_argument("--doc-id", help="corpus document id (default: first)")
    p.add_argument("--out", required=True, help="output text file")
    p.add_argument("--trace", help="write the generation trace JSON here")
    p.add_argument("--baseline", action="store_true",
                   help="single-seed biased sampling instead of candidate search")
    _add_wm_flags(p)
    _add_search_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="score a text file for the watermark")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--vocab", help="vocabulary file, one token per line")
    p.add_argument("--model", help="model file (vocabulary source)")
    p.add_argument("--prompt", help="generation prompt, if known")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    _add_wm_flags(p)
    _add_search_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("attack", help="perturb a text file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--attack", required=True, choices=("insert", "synonym", "delete"))
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vocab", help="vocabulary file (required for insert)")
    p.add_argument("--model", help="model file (vocabulary source)")
    p.add_argument("--dict", dest="dictionary", help="synonym dictionary file")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("evaluate", help="TPR/TNR/ROC over a config grid")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--gamma-grid", default=None, help="comma-separated gammas")
    p.add_argument("--delta-grid", default=None)
    p.add_argument("--beams-grid", default=None)
    p.add_argument("--alpha-grid", default=None)
    _add_wm_flags(p)
    _add_search_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate-null", help="detector calibration on random tokens")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--doc-len", type=int, default=200)
    p.add_argument("--vocab-size", type=int, default=1000)
    p.add_argument("--out", required=True, help="CSV output")
    _add_wm_flags(p)
    _add_search_flags(p)
    p.set_defaults(func=cmd_simulate_null)

    p = sub.add_parser("theory", help="verify the objective-equivalence result")
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--grid-resolution", type=int, default=4096)
    p.set_defaults(func=cmd_theory)
    return parser


def _add_wm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", default="soft",
                   choices=("none", "hard", "soft", "unigram", "window-min"))
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--delta", type=float, default=4.0)
    p.add_argument("--context-width", type=int, default=1, help="h, tokens hashed per step")
    p.add_argument("--key", type=int, default=41)
    p.add_argument("--pool-size", type=int, default=5000)
    p.add_argument("--modulus", type=int, default=(1 << 61) - 1)


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chunk-size", type=int, default=20)
    p.add_argument("--beams", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--max-tokens", type=int, default=200)
    p.add_argument("--similarity", default="rouge_l", choices=("rouge_l", "bow_cosine"))
    p.add_argument("--rouge-beta", type=float, default=1.0)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--config", help="JSON file with default flag values")


def _apply_config_file(args: argparse.Namespace, raw_argv: list[str]) -> None:
    path = getattr(args, "config", None)
    if not path:
        return
    with open(path, encoding="utf-8") as fh:
        values = json.load(fh)
    explicit = _explicit_flags(raw_argv)
    for key, value in values.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise WatersearchError(f"unknown config key: {key}")
        if attr not in explicit:
            setattr(args, attr, value)


def _explicit_flags(argv: list[str]) -> set[str]:
    out = set()
    for tok in argv:
        if tok.startswith("--"):
            out.add(tok[2:].split("=")[0].replace("-", "_"))
    return out


def _wm_config(args) -> WatermarkConfig:
    return WatermarkConfig(
        gamma=args.gamma,
        delta=args.delta,
        scheme=args.scheme,
        h=args.context_width,
        master_key=args.key,
        modulus=args.modulus,
        pool_size=args.pool_size,
    )


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        chunk_size=args.chunk_size,
        beams=args.beams,
        alpha=args.alpha,
        max_tokens=args.max_tokens,
        similarity=SimilarityKind(kind=args.similarity, beta=args.rouge_beta),
    )


def _load_vocab(args) -> Vocabulary:
    if getattr(args, "vocab", None):
        return Vocabulary.load(args.vocab)
    if getattr(args, "model", None):
        return NGramModel.load(args.model).vocab
    raise WatersearchError("need --vocab or --model to fix token ids")


def cmd_train_model(args) -> int:
    docs = load_training_text(args.corpus)
    model = train_ngram(docs, args.order, args.smoothing_k)
    model.save(args.out)
    print(f"trained order-{args.order} model: vocab={model.vocab.size} "
          f"contexts={len(model.counts)} -> {args.out}")
    return 0


def _prompt_tokens(args) -> list[str]:
    if args.prompt:
        return tokenize(args.prompt)
    if args.corpus:
        corpus = Corpus.load_jsonl(args.corpus)
        if args.doc_id is not None:
            for doc in corpus:
                if doc.doc_id == args.doc_id:
                    return doc.prompt
            raise WatersearchError(f"document id {args.doc_id!r} not in corpus")
        if len(corpus) == 0:
            raise WatersearchError("corpus is empty")
        return corpus.docs[0].prompt
    raise WatersearchError("need --prompt or --corpus")


def cmd_generate(args) -> int:
    model = NGramModel.load(args.model)
    wm = _wm_config(args)
    search = _search_config(args)
    prompt = _prompt_tokens(args)
    prompt_ids = model.vocab.encode(prompt)
    if args.baseline:
        rng = SplitMix64(args.rng_seed)
        out_ids = baseline_generate(model, prompt_ids, wm, search.max_tokens, rng)
        trace = None
    else:
        out_ids, trace = watersearch_generate(
            model, prompt_ids, wm, search, rng_seed=args.rng_seed
        )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(detokenize(model.vocab.decode(out_ids)))
        fh.write("\n" if out_ids else "")
    if args.trace:
        if trace is None:
            raise WatersearchError("--trace requires search generation, not --baseline")
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(trace.to_json())
    print(json.dumps({
        "tokens": len(out_ids),
        "out": args.out,
        "trace": args.trace,
        "scheme": wm.scheme,
        "key_fingerprint": wm.key_fingerprint(),
        "rng_seed": args.rng_seed,
    }))
    return 0


def cmd_detect(args) -> int:
    vocab = _load_vocab(args)
    with open(args.infile, encoding="utf-8") as fh:
        tokens = tokenize(fh.read())
    if not tokens:
        print("error: input text is empty", file=sys.stderr)
        return 2
    ids = vocab.encode_extended(tokens)
    prompt_ids = vocab.encode_extended(tokenize(args.prompt)) if args.prompt else None
    report = detect_document(
        ids, prompt_ids, _wm_config(args), _search_config(args), args.threshold
    )
    print(report.to_json())
    return 0


def cmd_attack(args) -> int:
    with open(args.infile, encoding="utf-8") as fh:
        tokens = tokenize(fh.read())
    rng = SplitMix64(args.seed)
    if args.attack == "insert":
        vocab = _load_vocab(args)
        out = insert_attack(tokens, args.rate, vocab, rng)
    elif args.attack == "synonym":
        if not args.dictionary:
            raise WatersearchError("synonym attack needs --dict")
        dictionary = SynonymDictionary.load(args.dictionary)
        out = synonym_attack(tokens, args.rate, dictionary, rng)
    else:
        out = delete_attack(tokens, args.rate, rng)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(detokenize(out) + ("\n" if out else ""))
    print(json.dumps({
        "attack": args.attack,
        "rate": args.rate,
        "seed": args.seed,
        "tokens_in": len(tokens),
        "tokens_out": len(out),
        "out": args.out,
    }))
    return 0


def _grid(raw: str | None, fallback: float, cast=float) -> list:
    if raw is None:
        return [fallback]
    return [cast(x) for x in raw.split(",") if x]


def cmd_evaluate(args) -> int:
    model = NGramModel.load(args.model)
    corpus = Corpus.load_jsonl(args.corpus)
    if args.trials < 1:
        raise WatersearchError("need --trials >= 1")
    if args.trials < 10:
        print("warning: fewer than 10 trials gives noisy rates", file=sys.stderr)
    gammas = _grid(args.gamma_grid, args.gamma)
    deltas = _grid(args.delta_grid, args.delta)
    beams = _grid(args.beams_grid, args.beams, int)
    alphas = _grid(args.alpha_grid, args.alpha)
    rows = []
    for g in gammas:
        for d in deltas:
            for k in beams:
                for a in alphas:
                    wm = WatermarkConfig(
                        gamma=g, delta=d, scheme=args.scheme, h=args.context_width,
                        master_key=args.key, modulus=args.modulus,
                        pool_size=args.pool_size,
                    )
                    search = SearchConfig(
                        chunk_size=args.chunk_size, beams=k, alpha=a,
                        max_tokens=args.max_tokens,
                        similarity=SimilarityKind(args.similarity, args.rouge_beta),
                    )
                    label = f"gamma={g},delta={d},beams={k},alpha={a}"
                    rows.append(evaluate_config(
                        model, corpus, wm, search, args.trials,
                        threshold=args.threshold, rng_seed=args.rng_seed,
                        label=label,
                    ))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "schema_version", "label", "trials", "threshold", "tpr", "tnr",
            "median_watermarked_p", "mean_similarity", "mean_green_fraction",
            "seconds_per_1000_tokens", "roc",
        ])
        for r in rows:
            writer.writerow([
                "1.0", r.label, r.trials, r.threshold, f"{r.tpr:.4f}", f"{r.tnr:.4f}",
                f"{r.median_watermarked_p:.3e}", f"{r.mean_similarity:.4f}",
                f"{r.mean_green_fraction:.4f}", f"{r.seconds_per_1000_tokens:.3f}",
                ";".join(f"{f:.4f}:{t:.4f}" for f, t in r.roc),
            ])
    print(f"wrote {len(rows)} rows -> {args.out}")
    return 0


def cmd_simulate_null(args) -> int:
    result = simulate_null(
        args.trials, args.doc_len, args.vocab_size,
        _wm_config(args), _search_config(args), rng_seed=args.rng_seed,
    )
    pvals = sorted(result["p_values"])
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema_version", "quantile", "doc_p_value"])
        for i, p in enumerate(pvals):
            writer.writerow(["1.0", f"{(i + 1) / len(pvals):.6f}", f"{p:.6e}"])
    print(json.dumps({
        "trials": args.trials,
        "fpr": result["fpr"],
        "ks_dplus": result["ks_dplus"],
        "ks_pvalue": result["ks_pvalue"],
        "out": args.out,
    }))
    return 0


def cmd_theory(args) -> int:
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "schema_version", "family", "green_mass", "alpha", "omega",
            "r_micro", "r_macro", "gap", "interior", "unique",
        ])
        worst = 0.0
        for family in default_family_grid():
            check = verify_theorem(family, grid_resolution=args.grid_resolution)
            worst = max(worst, check.gap)
            writer.writerow([
                "1.0", family.label, family.green_mass, family.alpha,
                f"{theorem_omega(family.alpha, family.fprime):.6f}",
                f"{check.r_micro:.9f}", f"{check.r_macro:.9f}",
                f"{check.gap:.3e}", check.interior, check.unique,
            ])
    print(f"max |r_micro - r_macro| over grid: {worst:.3e} -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
