"""Frozen teacher embedding stores and their similarity matrices.

A teacher maps exact sentence text to a fixed vector; batches query one or
two teachers for pairwise cosine scores, blending two stores with a convex
weight.  Scores are computed on demand per batch rather than materializing
a corpus-sized matrix.

File format (UTF-8): header line ``RCSE-TEACHER 1 <count> <dim>`` followed
by two lines per sentence, the raw text then <dim> whitespace-separated
decimal floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateKey, FormatError, TeacherCoverageGap, ZeroVector
from .losses import blend_teacher_scores
from .seeding import mix_seed
from .vectors import NORM_FLOOR, similarity_matrix

TEACHER_MAGIC = "RCSE-TEACHER"
TEACHER_VERSION = 1


@dataclass
class TeacherStore:
    name: str
    dim: int
    embeddings: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.embeddings)


@dataclass
class TeacherEnsemble:
    """One or two frozen teachers; alpha weights the first when blending."""

    teachers: list[TeacherStore]
    alpha: float = 1.0 / 3.0

    def __post_init__(self):
        if not 1 <= len(self.teachers) <= 2:
            raise ValueError(
                f"an ensemble holds one or two teachers, got {len(self.teachers)}"
            )


def load_teacher(path) -> TeacherStore:
    """Read a teacher file, validating counts, dims, and vector norms."""
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(f"{path}: empty teacher file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != TEACHER_MAGIC:
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    try:
        version, count, dim = int(header[1]), int(header[2]), int(header[3])
    except ValueError:
        raise FormatError(f"{path}: non-integer header fields {lines[0]!r}") from None
    if version != TEACHER_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dim < 1:
        raise FormatError(f"{path}: dim must be >= 1, got {dim}")
    if len(lines) - 1 != 2 * count:
        raise FormatError(
            f"{path}: header promises {count} sentences "
            f"({2 * count} lines) but file has {len(lines) - 1}"
        )
    store = TeacherStore(name=str(path), dim=dim)
    for k in range(count):
        sentence = lines[1 + 2 * k]
        values_line = lines[2 + 2 * k]
        if sentence in store.embeddings:
            raise DuplicateKey(f"{path}: duplicate sentence {sentence!r}")
        try:
            vector = np.array([float(v) for v in values_line.split()], dtype=np.float64)
        except ValueError:
            raise FormatError(
                f"{path}: non-decimal embedding value for {sentence!r}"
            ) from None
        if vector.size != dim:
            raise FormatError(
                f"{path}: expected {dim} values for {sentence!r}, got {vector.size}"
            )
        if not np.all(np.isfinite(vector)):
            raise FormatError(f"{path}: non-finite embedding for {sentence!r}")
        if float(np.linalg.norm(vector)) <= NORM_FLOOR:
            raise FormatError(f"{path}: zero vector for {sentence!r}")
        store.embeddings[sentence] = vector
    return store


def save_teacher(path, store: TeacherStore) -> None:
    """Write a store in the teacher format; floats use round-trip repr."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{TEACHER_MAGIC} {TEACHER_VERSION} {len(store)} {store.dim}\n")
        for sentence, vector in store.embeddings.items():
            handle.write(sentence + "\n")
            handle.write(" ".join(repr(float(v)) for v in vector) + "\n")


def _lookup_batch(store: TeacherStore, sentences) -> np.ndarray:
    rows = []
    for sentence in sentences:
        vector = store.embeddings.get(sentence)
        if vector is None:
            raise TeacherCoverageGap(
                f"teacher {store.name!r} has no embedding for {sentence!r}"
            )
        rows.append(vector)
    return np.stack(rows)


def teacher_similarity_matrix(ensemble: TeacherEnsemble, batch_sentences) -> np.ndarray:
    """N x N cosine scores of a sentence batch under the (blended) ensemble.

    With two teachers the per-teacher matrices are combined entrywise as
    alpha * first + (1 - alpha) * second, blending raw cosines rather than
    rank distributions.
    """
    matrices = []
    for store in ensemble.teachers:
        batch = _lookup_batch(store, batch_sentences)
        matrices.append(similarity_matrix(batch, batch))
    if len(matrices) == 1:
        return matrices[0]
    return blend_teacher_scores(matrices[0], matrices[1], ensemble.alpha)


def build_synthetic_teacher(
    seed: int, sentences, dim: int, clusters: int = 6, cluster_spread: float = 0.08
) -> TeacherStore:
    """Deterministic pseudo-random unit-vector teacher over the sentences.

    Stands in for a pre-trained teacher in tests and toy runs.  The store
    carries topic-like structure instead of i.i.d. noise: token types are
    assigned unit vectors near one of a few random cluster centers, and a
    sentence's vector is the normalized mean of its token vectors.  A
    bag-of-tokens student can therefore represent the teacher's similarity
    orderings exactly (an i.i.d. per-sentence teacher cannot be ranked by
    any such student much above chance), while a randomly initialized
    student shares none of the cluster geometry.  Identical
    (seed, sentences, dim) always produce identical stores.
    """
    if dim < 2:
        raise ValueError(f"synthetic teacher dim must be >= 2, got {dim}")
    rng = np.random.default_rng(mix_seed(seed, dim))
    centers = rng.normal(size=(clusters, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    token_vectors: dict[str, np.ndarray] = {}
    store = TeacherStore(name=f"synthetic-{seed}", dim=dim)
    for sentence in sentences:
        tokens = sentence.lower().split()
        for token in tokens:
            if token not in token_vectors:
                raw = centers[rng.integers(0, clusters)] + cluster_spread * rng.normal(
                    size=dim
                )
                token_vectors[token] = raw / np.linalg.norm(raw)
        mean = np.mean([token_vectors[token] for token in tokens], axis=0)
        norm = float(np.linalg.norm(mean))
        if norm <= 1e-9:  # near-cancelling bag; fall back to the first token
            vector = token_vectors[tokens[0]]
        else:
            vector = mean / norm
        store.embeddings[sentence] = vector
    return store
