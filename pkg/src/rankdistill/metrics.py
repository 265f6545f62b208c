"""Evaluation metrics: rank correlations, NDCG, and geometry measures.

Correlations operate on raw score lists; the embedding-level evaluators
take any model object with an ``embed(sentence) -> vector`` method
(dropout disabled) and score sentence pairs by cosine similarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data_io import STSExample
from .errors import (
    DegenerateInput,
    DimensionMismatch,
    EmptyInput,
    NegativeGold,
    PoolTooSmall,
)
from .vectors import cosine_similarity, normalize


@dataclass
class RankingGroup:
    """A query sentence with the (partner, gold) pairs it appears in."""

    query: str
    targets: list[tuple[str, float]]


@dataclass
class EvalPairSet:
    """Inputs for the geometry measures: normalized-pair distances for
    alignment, a vector pool for uniformity."""

    positive_pairs: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    pool: list[np.ndarray] = field(default_factory=list)


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatch(f"list shapes differ: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise DimensionMismatch("correlation needs at least two points")
    return a, b


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of average ranks (ties get average ranks)."""
    a, b = _paired(x, y)
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateInput("correlation undefined for a constant list")
    ra = _average_ranks(a)
    rb = _average_ranks(b)
    da = ra - ra.mean()
    db = rb - rb.mean()
    return float(np.dot(da, db) / math.sqrt(np.dot(da, da) * np.dot(db, db)))


def kendall_tau(x, y) -> float:
    """Tau-b: tie-adjusted Kendall correlation; plain tau when tie-free."""
    a, b = _paired(x, y)
    n = a.size
    sign_a = np.sign(a[:, None] - a[None, :])
    sign_b = np.sign(b[:, None] - b[None, :])
    upper = np.triu_indices(n, k=1)
    sa = sign_a[upper]
    sb = sign_b[upper]
    concordant = int(np.sum((sa * sb) > 0))
    discordant = int(np.sum((sa * sb) < 0))
    tied_a = int(np.sum(sa == 0))
    tied_b = int(np.sum(sb == 0))
    pairs = n * (n - 1) // 2
    denom = (pairs - tied_a) * (pairs - tied_b)
    if denom == 0:
        raise DegenerateInput("tau undefined when one list is entirely tied")
    return (concordant - discordant) / math.sqrt(denom)


def ndcg(pred, gold, k: int | None = None) -> float:
    """Normalized DCG with gain 2^gold - 1 and log2 position discount.

    Positions follow pred descending with stable index tie-breaks; the
    ideal ordering follows gold descending.  An all-zero gold list has
    ideal DCG 0 and is scored 1.0 by convention (every ordering is ideal).
    """
    p, g = _paired(pred, gold)
    if np.any(g < 0.0):
        raise NegativeGold("gold labels must be nonnegative")
    n = p.size
    if k is None:
        k = n
    if not 1 <= k <= n:
        raise ValueError(f"cutoff k must lie in 1..{n}, got {k}")
    gains = 2.0**g - 1.0
    discounts = 1.0 / np.log2(np.arange(2, k + 2, dtype=np.float64))
    by_pred = np.argsort(-p, kind="stable")[:k]
    by_gold = np.argsort(-g, kind="stable")[:k]
    ideal = float(np.dot(gains[by_gold], discounts))
    if ideal == 0.0:
        return 1.0
    return float(np.dot(gains[by_pred], discounts)) / ideal


def alignment(pairs: EvalPairSet) -> float:
    """Mean squared distance between normalized positive-pair vectors."""
    if not pairs.positive_pairs:
        raise EmptyInput("alignment needs at least one positive pair")
    total = 0.0
    for u, v in pairs.positive_pairs:
        diff = normalize(u) - normalize(v)
        total += float(np.dot(diff, diff))
    return total / len(pairs.positive_pairs)


def uniformity(pairs: EvalPairSet) -> float:
    """Log average Gaussian potential over normalized pool vectors.

    Averages exp(-2 ||u - v||^2) over unordered distinct pairs; evaluated
    through log-sum-exp so widely spread pools cannot underflow.
    """
    if len(pairs.pool) < 2:
        raise PoolTooSmall("uniformity needs a pool of at least two vectors")
    unit = np.stack([normalize(v) for v in pairs.pool])
    n = unit.shape[0]
    sq_dist = np.maximum(2.0 - 2.0 * (unit @ unit.T), 0.0)
    exponents = -2.0 * sq_dist[np.triu_indices(n, k=1)]
    peak = float(np.max(exponents))
    return peak + math.log(float(np.mean(np.exp(exponents - peak))))


def build_ranking_groups(dataset: list[STSExample]) -> list[RankingGroup]:
    """Collect per-sentence ranking tasks from a labeled pair dataset.

    A sentence appearing in a pair (on either side) becomes a query whose
    targets are its partners with their gold scores, in input order; only
    queries with more than three targets form a group.
    """
    targets: dict[str, list[tuple[str, float]]] = {}
    for example in dataset:
        targets.setdefault(example.sentence1, []).append(
            (example.sentence2, example.gold)
        )
        if example.sentence2 != example.sentence1:
            targets.setdefault(example.sentence2, []).append(
                (example.sentence1, example.gold)
            )
    return [
        RankingGroup(query=query, targets=partners)
        for query, partners in targets.items()
        if len(partners) > 3
    ]


def evaluate_sts(model, dataset: list[STSExample]) -> float:
    """Spearman correlation between predicted cosines and gold labels.

    ``model.embed`` must be dropout-free so predictions are deterministic.
    """
    if not dataset:
        raise EmptyInput("empty evaluation dataset")
    predictions = [
        cosine_similarity(model.embed(ex.sentence1), model.embed(ex.sentence2))
        for ex in dataset
    ]
    return spearman(predictions, [ex.gold for ex in dataset])


def evaluate_ranking(model, groups: list[RankingGroup]) -> tuple[float, float]:
    """Mean Kendall tau and mean NDCG of predicted scores over groups.

    Groups whose gold or predicted scores are entirely tied carry no
    ranking signal for tau and are skipped from both means.
    """
    if not groups:
        raise EmptyInput("no ranking groups to evaluate")
    taus = []
    ndcgs = []
    for group in groups:
        query_vec = model.embed(group.query)
        scores = [
            cosine_similarity(query_vec, model.embed(text))
            for text, _ in group.targets
        ]
        golds = [gold for _, gold in group.targets]
        try:
            taus.append(kendall_tau(scores, golds))
        except DegenerateInput:
            continue
        ndcgs.append(ndcg(scores, golds))
    if not taus:
        raise EmptyInput("every group was degenerate (all-tied scores)")
    return float(np.mean(taus)), float(np.mean(ndcgs))


def mean_row_kendall(scores_a, scores_b, exclude_diagonal: bool = True) -> float:
    """Average Kendall tau between corresponding rows of two score matrices.

    With exclude_diagonal the self-similarity entry is dropped from both
    rows, mirroring the positive-pair exclusion used in distillation.
    Degenerate rows (entirely tied) are skipped.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionMismatch(f"matrix shapes differ: {a.shape} vs {b.shape}")
    taus = []
    for i in range(a.shape[0]):
        row_a = a[i]
        row_b = b[i]
        if exclude_diagonal:
            keep = np.arange(a.shape[1]) != i
            row_a = row_a[keep]
            row_b = row_b[keep]
        try:
            taus.append(kendall_tau(row_a, row_b))
        except DegenerateInput:
            continue
    if not taus:
        raise EmptyInput("every row was degenerate")
    return float(np.mean(taus))
