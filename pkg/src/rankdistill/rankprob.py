"""Top-one and permutation probability kernels plus ordering utilities.

A score list of length n induces two probability objects: the top-one
distribution (temperature softmax, the chance each item ranks first) and
the Plackett-Luce permutation probability (sequential top-one draws over
shrinking suffixes).  Everything is computed in log space with
max-subtraction because temperatures as small as 0.0125 push raw
exponentials far outside float range.

Permutations are integer arrays where position i holds the index ranked
i-th.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import EmptyList, InvalidPermutation, ListTooLarge, NonPositiveTemperature

BRUTE_FORCE_MAX_N = 8


def _check_temperature(temperature: float) -> float:
    t = float(temperature)
    if not t > 0.0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature!r}")
    return t


def _check_scores(scores) -> np.ndarray:
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyList("scores must be a nonempty 1-D list")
    return arr


def _check_permutation(perm, n: int) -> np.ndarray:
    order = np.asarray(perm, dtype=np.intp)
    if order.ndim != 1 or order.size != n or not np.array_equal(
        np.sort(order), np.arange(n)
    ):
        raise InvalidPermutation(f"not a permutation of 0..{n - 1}: {perm!r}")
    return order


def log_softmax(scores: np.ndarray) -> np.ndarray:
    """Max-subtracted log softmax of a 1-D array."""
    shifted = scores - np.max(scores)
    return shifted - math.log(np.sum(np.exp(shifted)))


def top_one_distribution(scores, temperature: float) -> np.ndarray:
    """Probability that each item ranks first: softmax(scores / temperature).

    Entries are strictly positive and sum to 1 within 1e-12.
    """
    arr = _check_scores(scores)
    tau = _check_temperature(temperature)
    return np.exp(log_softmax(arr / tau))


def log_permutation_probability(scores, perm, temperature: float) -> float:
    """Log probability of ranking the items in the given order.

    Each sequential factor is the top-one log probability of the chosen
    item over the remaining suffix, so the result is finite for any finite
    scores.
    """
    arr = _check_scores(scores)
    tau = _check_temperature(temperature)
    order = _check_permutation(perm, arr.size)
    z = arr[order] / tau
    # logsumexp over suffixes z[i:], accumulated right to left.
    suffix_lse = np.logaddexp.accumulate(z[::-1])[::-1]
    return float(np.sum(z - suffix_lse))


def permutation_probability(scores, perm, temperature: float) -> float:
    """Probability in (0, 1] of a specific ranking of the score list."""
    return math.exp(log_permutation_probability(scores, perm, temperature))


def argsort_desc(scores) -> np.ndarray:
    """Indices sorted by descending score; ties keep ascending index order."""
    arr = _check_scores(scores)
    return np.argsort(-arr, kind="stable")


def rank_positions(scores) -> np.ndarray:
    """1-based rank of each item under descending order with stable ties."""
    order = argsort_desc(scores)
    ranks = np.empty(order.size, dtype=np.intp)
    ranks[order] = np.arange(1, order.size + 1)
    return ranks


def brute_force_top_one(scores, temperature: float) -> np.ndarray:
    """Top-one distribution by summing permutation mass, for n <= 8.

    Entry i sums permutation_probability over every permutation that ranks
    item i first.  Used as an enumeration oracle for top_one_distribution.
    """
    arr = _check_scores(scores)
    _check_temperature(temperature)
    n = arr.size
    if n > BRUTE_FORCE_MAX_N:
        raise ListTooLarge(f"refusing factorial enumeration for n = {n} > 8")
    probs = np.zeros(n, dtype=np.float64)
    for perm in itertools.permutations(range(n)):
        probs[perm[0]] += permutation_probability(arr, perm, temperature)
    return probs
