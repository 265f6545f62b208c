"""Corpus and dataset ingestion, vocabulary, tokenization, batching.

Text handling is deliberately minimal: UTF-8 files, one sentence per line,
lowercased whitespace tokenization with an UNK fallback.  Determinism wins
over linguistic fidelity at this scale.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BatchTooSmall,
    EmptySentence,
    FormatError,
    ScoreOutOfRange,
)
from .seeding import mix_seed

UNK_ID = 0
UNK_TOKEN = "<unk>"


@dataclass
class Corpus:
    sentences: list[str]
    deduplicated: bool = False


@dataclass(frozen=True)
class STSExample:
    sentence1: str
    sentence2: str
    gold: float


@dataclass
class Vocabulary:
    """Token <-> id map with id 0 reserved for unknown tokens."""

    token_to_id: dict[str, int] = field(default_factory=dict)
    id_to_token: list[str] = field(default_factory=lambda: [UNK_TOKEN])

    def __len__(self) -> int:
        return len(self.id_to_token)


def load_corpus(path, deduplicate: bool = False) -> Corpus:
    """Read one sentence per line, trimming whitespace and skipping blanks."""
    with open(path, encoding="utf-8") as handle:
        lines = [line.strip() for line in handle]
    sentences = [line for line in lines if line]
    if deduplicate:
        sentences = list(dict.fromkeys(sentences))
    return Corpus(sentences=sentences, deduplicated=deduplicate)


def load_sts_tsv(path) -> list[STSExample]:
    """Parse `sentence1 TAB sentence2 TAB score` lines with scores in [0, 5]."""
    examples = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise FormatError(
                    f"{path}:{line_no}: expected 3 tab-separated fields, got {len(fields)}"
                )
            s1, s2, score_text = fields
            if not s1 or not s2:
                raise FormatError(f"{path}:{line_no}: empty sentence field")
            try:
                gold = float(score_text)
            except ValueError:
                raise FormatError(
                    f"{path}:{line_no}: score {score_text!r} is not a decimal"
                ) from None
            if not 0.0 <= gold <= 5.0:
                raise ScoreOutOfRange(
                    f"{path}:{line_no}: score {gold} outside [0, 5]"
                )
            examples.append(STSExample(sentence1=s1, sentence2=s2, gold=gold))
    return examples


def _split_tokens(sentence: str) -> list[str]:
    return sentence.lower().split()


def build_vocab(corpus: Corpus, min_count: int = 1) -> Vocabulary:
    """Frequency vocabulary over lowercased whitespace tokens.

    Ids are assigned in descending frequency, ties broken by first
    occurrence; tokens rarer than min_count (and the reserved unknown
    marker itself) fall back to the UNK id.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    position = 0
    for sentence in corpus.sentences:
        for token in _split_tokens(sentence):
            counts[token] += 1
            if token not in first_seen:
                first_seen[token] = position
            position += 1
    listed = [
        tok
        for tok in sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
        if counts[tok] >= min_count and tok != UNK_TOKEN
    ]
    vocab = Vocabulary()
    for tok in listed:
        vocab.token_to_id[tok] = len(vocab.id_to_token)
        vocab.id_to_token.append(tok)
    return vocab


def tokenize(vocab: Vocabulary, sentence: str) -> list[int]:
    """Map a sentence to token ids, one per whitespace token, UNK fallback."""
    if not sentence or not sentence.strip():
        raise EmptySentence("cannot tokenize an empty sentence")
    return [vocab.token_to_id.get(tok, UNK_ID) for tok in _split_tokens(sentence)]


def batch_iterator(corpus: Corpus, batch_size: int, shuffle_seed: int, epoch: int):
    """Yield index batches from a deterministic per-epoch shuffle.

    A trailing batch smaller than 2 is dropped because the contrastive
    term needs at least one in-batch negative.
    """
    if batch_size < 2:
        raise BatchTooSmall(f"batch_size must be >= 2, got {batch_size}")
    n = len(corpus.sentences)
    rng = np.random.default_rng(mix_seed(shuffle_seed, epoch))
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        batch = order[start : start + batch_size]
        if batch.size < 2:
            break
        yield batch.tolist()
