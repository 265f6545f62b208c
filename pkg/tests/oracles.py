"""Independent oracles used by the test suite.

These deliberately avoid the library's own code paths: gradients come from
central finite differences, correlations from direct rank/pair formulas,
and NDCG from a literal transcription of its definition.  They are slow
and simple on purpose.
"""

import math

import numpy as np


def central_difference(f, x, h=1e-5):
    """Central-difference gradient of scalar f at 1-D or 2-D point x."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        up = x.copy()
        down = x.copy()
        up[idx] += h
        down[idx] -= h
        grad[idx] = (f(up) - f(down)) / (2.0 * h)
    return grad


def relative_error(a, b, floor=1e-5):
    """Norm-based relative difference between two arrays.

    The floor keeps the comparison meaningful when a gradient saturates
    to numerical zero: central differences at h = 1e-5 carry roundoff of
    roughly eps * |f| / (2h) ~ 1e-10 per entry, so differences below the
    floor-scaled tolerance cannot be distinguished from FD noise.  With
    the floor, near-zero gradients are effectively checked at an absolute
    tolerance of floor * rtol while everything else is checked at the
    true relative tolerance.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return np.linalg.norm(a - b) / denom


def rank_by_sorting(values):
    """Average ranks (1-based) with ties sharing the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman_brute(x, y):
    """Pearson correlation of average ranks, computed from first principles."""
    rx = rank_by_sorting(x)
    ry = rank_by_sorting(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    return float(np.sum(dx * dy) / math.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))


def kendall_brute(x, y):
    """Tau-b by explicit O(n^2) pair enumeration."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    concordant = discordant = tied_x = tied_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            sx = np.sign(x[i] - x[j])
            sy = np.sign(y[i] - y[j])
            if sx == 0 and sy == 0:
                tied_x += 1
                tied_y += 1
            elif sx == 0:
                tied_x += 1
            elif sy == 0:
                tied_y += 1
            elif sx == sy:
                concordant += 1
            else:
                discordant += 1
    pairs = n * (n - 1) // 2
    return (concordant - discordant) / math.sqrt(
        (pairs - tied_x) * (pairs - tied_y)
    )


def ndcg_brute(pred, gold, k=None):
    """NDCG with gain 2^gold - 1 and log2 position discount."""
    pred = np.asarray(pred, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    n = len(pred)
    if k is None:
        k = n

    def dcg(ordering):
        total = 0.0
        for pos, idx in enumerate(ordering[:k], start=1):
            total += (2.0 ** gold[idx] - 1.0) / math.log2(pos + 1)
        return total

    by_pred = sorted(range(n), key=lambda i: (-pred[i], i))
    by_gold = sorted(range(n), key=lambda i: (-gold[i], i))
    ideal = dcg(by_gold)
    if ideal == 0.0:
        return 1.0
    return dcg(by_pred) / ideal
