"""Corpus ingestion and synthetic toy corpora.

A corpus is JSONL with one document per line: {"id", "prompt", "reference"?}.
Training text for the toy model is plain UTF-8, one document per line.
The synthetic corpus builder produces a deterministic word-graph corpus
with enough branching that the n-gram model keeps high conditional entropy,
which is what gives a logit-bias watermark room to act.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import InputError
from .rng import SplitMix64
from .vocab import tokenize


@dataclass
class CorpusDoc:
    doc_id: str
    prompt: list[str]
    reference: list[str] | None = None


class Corpus:
    def __init__(self, docs: list[CorpusDoc]):
        ids = [d.doc_id for d in docs]
        if len(set(ids)) != len(ids):
            raise InputError("corpus document ids must be unique")
        self.docs = docs

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self):
        return iter(self.docs)

    @classmethod
    def load_jsonl(cls, path: str) -> "Corpus":
        docs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise InputError(f"bad JSON on corpus line {lineno}: {exc}") from exc
                if "id" not in row or "prompt" not in row:
                    raise InputError(f"corpus line {lineno} lacks id/prompt")
                ref = row.get("reference")
                docs.append(
                    CorpusDoc(
                        doc_id=str(row["id"]),
                        prompt=tokenize(str(row["prompt"])),
                        reference=tokenize(str(ref)) if ref is not None else None,
                    )
                )
        return cls(docs)

    def save_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for doc in self.docs:
                row = {"id": doc.doc_id, "prompt": " ".join(doc.prompt)}
                if doc.reference is not None:
                    row["reference"] = " ".join(doc.reference)
                fh.write(json.dumps(row) + "\n")


_SYLLABLES = (
    "ba be bi bo bu da de di do du fa fe fi fo fu ga ge gi go gu "
    "ka ke ki ko ku la le li lo lu ma me mi mo mu na ne ni no nu "
    "pa pe pi po pu ra re ri ro ru sa se si so su ta te ti to tu"
).split()


def make_word_list(count: int) -> list[str]:
    """Deterministic list of distinct pronounceable pseudo-words."""
    n = len(_SYLLABLES)
    if count > n * n * n:
        raise InputError(f"cannot build more than {n**3} words, asked for {count}")
    words = []
    for i in range(count):
        a, rem = divmod(i, n * n)
        b, c = divmod(rem, n)
        # Two syllables for the first n*n words, three after; lengths differ
        # so the two ranges cannot collide.
        words.append(_SYLLABLES[c] + _SYLLABLES[b] + (_SYLLABLES[a - 1] if a else ""))
    return words


def synthetic_corpus(
    n_docs: int,
    doc_len: int,
    vocab_size: int = 1200,
    branching: int = 60,
    seed: int = 7,
) -> list[list[str]]:
    """Documents from a random word graph with ``branching`` successors per word.

    Each word's successor set is fixed by the seed; documents walk the graph
    uniformly.  Conditional entropy is about log(branching), high enough
    that a soft logit bias can steer token choice.
    """
    words = make_word_list(vocab_size)
    rng = SplitMix64(seed)
    successors = []
    for _ in range(vocab_size):
        succ = [rng.next_below(vocab_size) for _ in range(branching)]
        successors.append(succ)
    docs = []
    for _ in range(n_docs):
        w = rng.next_below(vocab_size)
        doc = [words[w]]
        for _ in range(doc_len - 1):
            w = successors[w][rng.next_below(branching)]
            doc.append(words[w])
        docs.append(doc)
    return docs


def save_training_text(docs: list[list[str]], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(" ".join(doc) + "\n")


def load_training_text(path: str) -> list[list[str]]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = tokenize(line)
            if toks:
                docs.append(toks)
    return docs
