"""Training losses over batch similarity matrices, with analytic gradients.

Four terms operate on student similarity scores:

* ``info_nce`` -- contrastive cross-entropy pulling each diagonal
  (positive-pair) similarity above its in-batch negatives;
* ``js_consistency`` -- Jensen-Shannon divergence between the two dropout
  views' per-row top-one distributions, enforcing that both views rank the
  batch the same way;
* ``listnet_loss`` -- top-one cross-entropy against a frozen teacher's
  score row (listwise distillation);
* ``listmle_loss`` -- negative log likelihood of the teacher's score
  ordering under the student's scores (listwise distillation).

``combined_loss`` assembles total = info_nce + beta * consistency +
gamma * rank and merges the per-term score gradients.  Every gradient here
is with respect to raw similarity scores; chaining into encoder parameters
happens elsewhere.

All softmax and cross-entropy terms go through max-subtracted log-softmax:
at the temperatures used for distillation (down to 0.0125) probabilities
underflow long before their logs do.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaOutOfRange,
    BatchTooSmall,
    DimensionMismatch,
    IndexOutOfRange,
    NonPositiveTemperature,
)
from .rankprob import _check_permutation, argsort_desc, log_softmax

LISTNET = "listnet"
LISTMLE = "listmle"
RANK_METHODS = (LISTNET, LISTMLE)


@dataclass(frozen=True)
class Temperatures:
    """Softmax temperatures: tau1 for contrastive/consistency terms, tau2
    for student distillation scores, tau3 for teacher scores (top-one
    cross-entropy only).  Defaults follow the 2:1 student:teacher ratio
    that works best for the distillation terms."""

    tau1: float = 0.05
    tau2: float = 0.025
    tau3: float = 0.0125

    def __post_init__(self):
        for name in ("tau1", "tau2", "tau3"):
            if not getattr(self, name) > 0.0:
                raise NonPositiveTemperature(
                    f"{name} must be > 0, got {getattr(self, name)!r}"
                )


@dataclass(frozen=True)
class LossWeights:
    """Term weights: beta scales the consistency term, gamma the rank term,
    alpha blends two teachers (weight of the first)."""

    beta: float = 1.0
    gamma: float = 1.0
    alpha: float = 1.0 / 3.0

    def __post_init__(self):
        if self.beta < 0.0 or self.gamma < 0.0:
            raise ValueError("beta and gamma must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {self.alpha!r}")


@dataclass(frozen=True)
class LossBreakdown:
    """Per-term loss values and their weighted total."""

    info_nce: float
    consistency: float
    rank: float
    total: float


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not tau > 0.0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {tau!r}")
    return tau


def _check_square(sim, name: str = "sim") -> np.ndarray:
    m = np.asarray(sim, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] < 2:
        raise BatchTooSmall("similarity matrix needs N >= 2")
    return m


def _log_softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def info_nce(sim, tau1: float) -> tuple[float, np.ndarray]:
    """Contrastive loss over one view's similarity matrix.

    Row i is scored as cross-entropy between the one-hot target at the
    diagonal and the row's top-one distribution at temperature tau1, i.e.
    loss = sum_i [-M[i,i]/tau1 + logsumexp(M[i,:]/tau1)], which equals
    minus the summed log top-one probability of each positive pair.

    Returns (loss, gradient) where grad[i, j] = (p_ij - delta_ij) / tau1
    and p is the row-wise softmax; each gradient row sums to zero.
    """
    m = _check_square(sim)
    tau = _check_tau(tau1)
    log_p = _log_softmax_rows(m / tau)
    loss = -float(np.trace(log_p))
    grad = (np.exp(log_p) - np.eye(m.shape[0])) / tau
    return loss, grad


def js_consistency(sim_ab, sim_ba, tau1: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Jensen-Shannon divergence between the two views' rank distributions.

    Row i of each matrix is the similarity list of sentence i under one
    dropout view; both rows are softmaxed at tau1 and compared with
    JS(P||Q) = (KL(P||M) + KL(Q||M)) / 2, M = (P+Q)/2.  The per-row value
    lies in [0, ln 2] and the total is symmetric in the two arguments.

    Gradients flow through each row's softmax: with
    g_k = log(2 P_k / (P_k + Q_k)) / 2, the derivative along the first
    view's scores is P_k (g_k - sum_m P_m g_m) / tau1, and symmetrically
    for the second view.
    """
    p_scores = _check_square(sim_ab, "sim_ab")
    q_scores = _check_square(sim_ba, "sim_ba")
    if p_scores.shape != q_scores.shape:
        raise DimensionMismatch(
            f"view matrices differ: {p_scores.shape} vs {q_scores.shape}"
        )
    tau = _check_tau(tau1)
    log_p = _log_softmax_rows(p_scores / tau)
    log_q = _log_softmax_rows(q_scores / tau)
    p = np.exp(log_p)
    q = np.exp(log_q)
    # log M = log((P + Q) / 2), evaluated in log space to survive underflow.
    log_m = np.logaddexp(log_p, log_q) - np.log(2.0)
    g = 0.5 * (log_p - log_m)
    h = 0.5 * (log_q - log_m)
    loss = float(np.sum(p * g) + np.sum(q * h))
    grad_ab = p * (g - np.sum(p * g, axis=1, keepdims=True)) / tau
    grad_ba = q * (h - np.sum(q * h, axis=1, keepdims=True)) / tau
    return loss, grad_ab, grad_ba


def exclude_positive(row, positive_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Drop the positive-pair score from a row, keeping the rest in order.

    Returns (shortened row, kept original indices); the index array lets
    gradients computed on the shortened row scatter back into full rows.
    """
    arr = np.asarray(row, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D row, got shape {arr.shape}")
    if arr.size < 2:
        raise BatchTooSmall("nothing left to rank after excluding the positive")
    if not 0 <= positive_index < arr.size:
        raise IndexOutOfRange(
            f"positive index {positive_index} outside 0..{arr.size - 1}"
        )
    kept = np.concatenate(
        [np.arange(positive_index), np.arange(positive_index + 1, arr.size)]
    )
    return arr[kept], kept


def listnet_loss(student_row, teacher_row, tau2: float, tau3: float) -> tuple[float, np.ndarray]:
    """Top-one cross-entropy between teacher and student score rows.

    With t = softmax(teacher/tau3) and log s = log_softmax(student/tau2):
    loss = -sum_j t_j log s_j and grad_k = (s_k - t_k) / tau2.  Both rows
    are expected to already have the positive pair excluded.
    """
    student = np.asarray(student_row, dtype=np.float64)
    teacher = np.asarray(teacher_row, dtype=np.float64)
    if student.ndim != 1 or student.shape != teacher.shape:
        raise DimensionMismatch(
            f"row shapes differ: {student.shape} vs {teacher.shape}"
        )
    if student.size == 0:
        raise DimensionMismatch("rows must be nonempty")
    tau_s = _check_tau(tau2)
    tau_t = _check_tau(tau3)
    log_s = log_softmax(student / tau_s)
    t = np.exp(log_softmax(teacher / tau_t))
    loss = -float(np.dot(t, log_s))
    grad = (np.exp(log_s) - t) / tau_s
    return loss, grad


def listmle_loss(student_row, teacher_perm, tau2: float) -> tuple[float, np.ndarray]:
    """Negative log likelihood of the teacher's ordering under the student.

    The ordering likelihood factorizes over suffixes: at position i the
    chosen item competes against everything not yet placed.  The gradient
    therefore accumulates one softmax-minus-one-hot term per suffix, each
    spread over that suffix's members; it sums to zero overall.
    """
    student = np.asarray(student_row, dtype=np.float64)
    if student.ndim != 1 or student.size == 0:
        raise DimensionMismatch("student row must be a nonempty 1-D list")
    tau = _check_tau(tau2)
    order = _check_permutation(teacher_perm, student.size)
    z = student[order] / tau
    n = z.size
    suffix_lse = np.logaddexp.accumulate(z[::-1])[::-1]
    loss = float(np.sum(suffix_lse - z))
    # grad in placed order: sum over suffixes i <= j of softmax_i(j), minus
    # one where j is the item chosen at step i = j.
    exponent = z[None, :] - suffix_lse[:, None]  # [i, j] -> log softmax_i(j)
    lower_i, lower_j = np.tril_indices(n, k=-1)
    exponent[lower_i, lower_j] = -np.inf  # item j already placed before step i
    grad_placed = (np.exp(exponent).sum(axis=0) - 1.0) / tau
    grad = np.zeros_like(student)
    grad[order] = grad_placed
    return loss, grad


def blend_teacher_scores(s1, s2, alpha: float) -> np.ndarray:
    """Convex combination alpha * s1 + (1 - alpha) * s2 of teacher scores."""
    a = np.asarray(s1, dtype=np.float64)
    b = np.asarray(s2, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"score shapes differ: {a.shape} vs {b.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha!r}")
    return alpha * a + (1.0 - alpha) * b


def combined_loss(
    sim_ab,
    sim_ba,
    teacher_scores,
    temps: Temperatures,
    weights: LossWeights,
    method: str = LISTNET,
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    """Weighted sum of contrastive, consistency, and rank terms.

    The rank term runs per row of the AB-view student matrix against the
    matching teacher row, with the positive (diagonal) entry excluded from
    both; for the ordering-likelihood method the target permutation is the
    stable descending sort of the excluded teacher row.  Terms with a zero
    weight are skipped and reported as 0.

    Returns the breakdown plus gradients for both view matrices; the
    BA-view gradient only carries the consistency term.
    """
    m_ab = _check_square(sim_ab, "sim_ab")
    m_ba = _check_square(sim_ba, "sim_ba")
    teacher = _check_square(np.asarray(teacher_scores, dtype=np.float64), "teacher")
    if m_ab.shape != m_ba.shape or m_ab.shape != teacher.shape:
        raise DimensionMismatch(
            f"matrix shapes differ: {m_ab.shape}, {m_ba.shape}, {teacher.shape}"
        )
    if method not in RANK_METHODS:
        raise ValueError(f"unknown rank method {method!r}; expected {RANK_METHODS}")

    n = m_ab.shape[0]
    nce_value, grad_ab = info_nce(m_ab, temps.tau1)
    grad_ba = np.zeros_like(m_ba)

    consistency_value = 0.0
    if weights.beta != 0.0:
        consistency_value, grad_js_ab, grad_js_ba = js_consistency(
            m_ab, m_ba, temps.tau1
        )
        grad_ab = grad_ab + weights.beta * grad_js_ab
        grad_ba = grad_ba + weights.beta * grad_js_ba

    rank_value = 0.0
    if weights.gamma != 0.0:
        rank_grad = np.zeros_like(m_ab)
        for i in range(n):
            student_row, kept = exclude_positive(m_ab[i], i)
            teacher_row, _ = exclude_positive(teacher[i], i)
            if method == LISTNET:
                row_loss, row_grad = listnet_loss(
                    student_row, teacher_row, temps.tau2, temps.tau3
                )
            else:
                perm = argsort_desc(teacher_row)
                row_loss, row_grad = listmle_loss(student_row, perm, temps.tau2)
            rank_value += row_loss
            rank_grad[i, kept] = row_grad
        grad_ab = grad_ab + weights.gamma * rank_grad

    total = nce_value + weights.beta * consistency_value + weights.gamma * rank_value
    breakdown = LossBreakdown(
        info_nce=nce_value,
        consistency=consistency_value,
        rank=rank_value,
        total=total,
    )
    return breakdown, grad_ab, grad_ba
