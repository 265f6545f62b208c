"""Dense vector and cosine-similarity primitives with analytic derivatives.

Embeddings are plain 1-D float64 numpy arrays; similarity matrices are 2-D
float64 arrays whose entry [i, j] is the cosine between row i of one view
and row j of the other.  All accumulation happens in float64 so downstream
gradient checks hold at 1e-6 relative tolerance.
"""

from __future__ import annotations

import numpy as np

from .errors import BatchTooSmall, DimensionMismatch, ZeroVector

NORM_FLOOR = 1e-30


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


def _checked_norm(v: np.ndarray) -> float:
    norm = float(np.linalg.norm(v))
    if norm <= NORM_FLOOR:
        raise ZeroVector(f"vector norm {norm!r} is at or below {NORM_FLOOR!r}")
    return norm


def normalize(v) -> np.ndarray:
    """Return v / ||v|| with unit Euclidean norm.

    Raises ZeroVector when the norm is at or below the 1e-30 floor.
    """
    arr = _as_vector(v)
    return arr / _checked_norm(arr)


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between u and v, clamped to [-1, 1].

    The clamp absorbs float rounding so ranking metrics downstream can
    assume the closed interval.
    """
    a = _as_vector(u)
    b = _as_vector(v)
    if a.shape != b.shape:
        raise DimensionMismatch(f"vector lengths differ: {a.shape[0]} vs {b.shape[0]}")
    # Normalize before the dot product so huge magnitudes cannot overflow.
    value = float(np.dot(a / _checked_norm(a), b / _checked_norm(b)))
    return float(min(1.0, max(-1.0, value)))


def cosine_similarity_grad(u, v) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of cosine_similarity(u, v) with respect to u and v.

    grad_u = v/(||u|| ||v||) - cos(u, v) * u/||u||^2, and symmetrically for
    grad_v.  Both vanish along their own argument's direction because the
    cosine is scale invariant.
    """
    a = _as_vector(u)
    b = _as_vector(v)
    if a.shape != b.shape:
        raise DimensionMismatch(f"vector lengths differ: {a.shape[0]} vs {b.shape[0]}")
    norm_a = _checked_norm(a)
    norm_b = _checked_norm(b)
    a_hat = a / norm_a
    b_hat = b / norm_b
    cos = float(np.dot(a_hat, b_hat))
    grad_u = (b_hat - cos * a_hat) / norm_a
    grad_v = (a_hat - cos * b_hat) / norm_b
    return grad_u, grad_v


def similarity_matrix(view_a, view_b) -> np.ndarray:
    """N x N matrix of cosines between two equally sized vector lists.

    Row i holds the similarities of view_a[i] against every view_b[j];
    building the matrix from the swapped views yields the exact transpose.
    """
    a = np.asarray(view_a, dtype=np.float64)
    b = np.asarray(view_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionMismatch("views must be lists of 1-D vectors")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"view sizes differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(
            f"vector lengths differ: {a.shape[1]} vs {b.shape[1]}"
        )
    if a.shape[0] < 2:
        raise BatchTooSmall("a batch must contain at least one negative (N >= 2)")
    norms_a = np.linalg.norm(a, axis=1, keepdims=True)
    norms_b = np.linalg.norm(b, axis=1, keepdims=True)
    if np.any(norms_a <= NORM_FLOOR) or np.any(norms_b <= NORM_FLOOR):
        raise ZeroVector("batch contains a vector with norm at or below 1e-30")
    entries = (a / norms_a) @ (b / norms_b).T
    return np.clip(entries, -1.0, 1.0)
