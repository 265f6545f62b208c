"""Trainable bag-of-tokens sentence encoder and its training loop.

The encoder is deliberately small: an embedding table, elementwise
inverted dropout on the looked-up token embeddings, then mean pooling.
Encoding the same sentence under two different dropout seeds produces the
two views whose similarity matrices feed the losses, and every gradient
flows through the table so the full objective can be checked end to end
against finite differences.

Determinism contract: each (sentence, view) dropout stream is derived from
(base_seed, step_index, sentence_index, view) through ``mix_seed``, so a
run is bit-reproducible from its config and seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .data_io import (
    Corpus,
    Vocabulary,
    batch_iterator,
    build_vocab,
    load_sts_tsv,
    tokenize,
)
from .errors import (
    EmptyCorpus,
    EmptyTokenList,
    FormatError,
    MissingCache,
    ShapeMismatch,
    TeacherCoverageGap,
    TokenIdOutOfRange,
)
from .losses import LossBreakdown, LossWeights, Temperatures, combined_loss
from .metrics import evaluate_sts
from .seeding import mix_seed
from .teacher import TeacherEnsemble, teacher_similarity_matrix
from .vectors import similarity_matrix

CHECKPOINT_MAGIC = b"RCSE1"


@dataclass
class EncoderParams:
    vocab_size: int
    dim: int
    embedding_table: np.ndarray  # vocab_size x dim, float64
    dropout_p: float = 0.1


@dataclass
class SentenceCache:
    """Forward-pass record for one sentence: token ids plus the scaled
    dropout masks of both views, needed to push gradients into the table."""

    tokens: np.ndarray
    mask_a: np.ndarray
    mask_b: np.ndarray


@dataclass
class BatchViews:
    view_a: np.ndarray  # N x dim
    view_b: np.ndarray  # N x dim
    token_cache: list[SentenceCache] | None = None


def init_params(vocab_size: int, dim: int, dropout_p: float, seed: int) -> EncoderParams:
    """Gaussian-initialized table; scale is irrelevant to cosine scores."""
    rng = np.random.default_rng(mix_seed(seed, vocab_size, dim))
    table = rng.normal(scale=0.1, size=(vocab_size, dim))
    return EncoderParams(
        vocab_size=vocab_size, dim=dim, embedding_table=table, dropout_p=dropout_p
    )


def _check_tokens(params: EncoderParams, tokens) -> np.ndarray:
    ids = np.asarray(tokens, dtype=np.intp)
    if ids.ndim != 1 or ids.size == 0:
        raise EmptyTokenList("encoder input must contain at least one token")
    if np.any(ids < 0) or np.any(ids >= params.vocab_size):
        raise TokenIdOutOfRange(
            f"token ids must lie in 0..{params.vocab_size - 1}"
        )
    return ids


def _dropout_mask(shape, dropout_p: float, seed: int) -> np.ndarray:
    """Inverted-scaling keep mask: kept entries become 1/(1-p), dropped 0."""
    if dropout_p == 0.0:
        return np.ones(shape)
    rng = np.random.default_rng(seed)
    keep = rng.random(shape) >= dropout_p
    return keep / (1.0 - dropout_p)


def encode(params: EncoderParams, tokens, dropout_seed: int) -> np.ndarray:
    """Mean pooled, dropout-masked token embeddings for one sentence."""
    vector, _ = _encode_cached(params, tokens, dropout_seed)
    return vector


def _encode_cached(params, tokens, dropout_seed: int) -> tuple[np.ndarray, np.ndarray]:
    ids = _check_tokens(params, tokens)
    embedded = params.embedding_table[ids]
    mask = _dropout_mask(embedded.shape, params.dropout_p, dropout_seed)
    return np.mean(embedded * mask, axis=0), mask


def encode_batch(
    params: EncoderParams, sentences, base_seed: int, step_index: int
) -> BatchViews:
    """Encode every sentence twice under independent dropout streams."""
    view_a = []
    view_b = []
    cache = []
    for i, tokens in enumerate(sentences):
        vec_a, mask_a = _encode_cached(
            params, tokens, mix_seed(base_seed, step_index, i, 0)
        )
        vec_b, mask_b = _encode_cached(
            params, tokens, mix_seed(base_seed, step_index, i, 1)
        )
        view_a.append(vec_a)
        view_b.append(vec_b)
        cache.append(
            SentenceCache(
                tokens=np.asarray(tokens, dtype=np.intp), mask_a=mask_a, mask_b=mask_b
            )
        )
    return BatchViews(
        view_a=np.stack(view_a), view_b=np.stack(view_b), token_cache=cache
    )


def _cosine_backward(rows: np.ndarray, cols: np.ndarray, grad: np.ndarray):
    """Backprop grad through sim[i, j] = cos(rows[i], cols[j]).

    Returns (d rows, d cols).  This is the batched form of the single-pair
    cosine gradient: d cos / d row_i = (col_hat_j - cos_ij row_hat_i) / ||row_i||.
    """
    row_norms = np.linalg.norm(rows, axis=1, keepdims=True)
    col_norms = np.linalg.norm(cols, axis=1, keepdims=True)
    rows_hat = rows / row_norms
    cols_hat = cols / col_norms
    cos = rows_hat @ cols_hat.T
    d_rows = (grad @ cols_hat - np.sum(grad * cos, axis=1, keepdims=True) * rows_hat)
    d_rows /= row_norms
    d_cols = (grad.T @ rows_hat - np.sum(grad * cos, axis=0)[:, None] * cols_hat)
    d_cols /= col_norms
    return d_rows, d_cols


def backward_to_params(
    params: EncoderParams, views: BatchViews, grad_ab: np.ndarray, grad_ba: np.ndarray
) -> np.ndarray:
    """Accumulate d loss / d embedding_table from both score gradients.

    grad_ab differentiates the matrix cos(view_a[i], view_b[j]) and
    grad_ba the matrix cos(view_b[i], view_a[j]); each sentence gradient
    is then spread over its tokens through the cached dropout masks and
    the 1/T mean-pool factor, in ascending sentence order.
    """
    if views.token_cache is None:
        raise MissingCache("backward pass needs the forward token/mask cache")
    n = views.view_a.shape[0]
    grad_ab = np.asarray(grad_ab, dtype=np.float64)
    grad_ba = np.asarray(grad_ba, dtype=np.float64)
    if grad_ab.shape != (n, n) or grad_ba.shape != (n, n):
        raise ShapeMismatch(f"score gradients must be {n} x {n}")

    d_a, d_b = _cosine_backward(views.view_a, views.view_b, grad_ab)
    d_b2, d_a2 = _cosine_backward(views.view_b, views.view_a, grad_ba)
    d_a += d_a2
    d_b += d_b2

    grad_table = np.zeros_like(params.embedding_table)
    for i, record in enumerate(views.token_cache):
        scale = 1.0 / record.tokens.size
        np.add.at(grad_table, record.tokens, scale * record.mask_a * d_a[i])
        np.add.at(grad_table, record.tokens, scale * record.mask_b * d_b[i])
    return grad_table


@dataclass
class OptimizerState:
    step_count: int
    first_moment: np.ndarray
    second_moment: np.ndarray
    learning_rate: float
    decay1: float
    decay2: float
    epsilon: float


def init_optimizer(
    params: EncoderParams,
    learning_rate: float = 1e-3,
    decay1: float = 0.9,
    decay2: float = 0.999,
    epsilon: float = 1e-8,
) -> OptimizerState:
    shape = params.embedding_table.shape
    return OptimizerState(
        step_count=0,
        first_moment=np.zeros(shape),
        second_moment=np.zeros(shape),
        learning_rate=learning_rate,
        decay1=decay1,
        decay2=decay2,
        epsilon=epsilon,
    )


def optimizer_step(
    params: EncoderParams, opt_state: OptimizerState, grads: np.ndarray
) -> tuple[EncoderParams, OptimizerState]:
    """One bias-corrected adaptive-moment update; inputs are not mutated.

    With decay1 = decay2 = 0 this degrades to sign-like gradient descent
    scaled by learning_rate / (|g| + epsilon).
    """
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.embedding_table.shape:
        raise ShapeMismatch(
            f"gradient shape {grads.shape} != table shape {params.embedding_table.shape}"
        )
    t = opt_state.step_count + 1
    m = opt_state.decay1 * opt_state.first_moment + (1.0 - opt_state.decay1) * grads
    v = opt_state.decay2 * opt_state.second_moment + (1.0 - opt_state.decay2) * grads**2
    m_hat = m / (1.0 - opt_state.decay1**t)
    v_hat = v / (1.0 - opt_state.decay2**t)
    new_table = params.embedding_table - opt_state.learning_rate * m_hat / (
        np.sqrt(v_hat) + opt_state.epsilon
    )
    new_params = EncoderParams(
        vocab_size=params.vocab_size,
        dim=params.dim,
        embedding_table=new_table,
        dropout_p=params.dropout_p,
    )
    new_state = OptimizerState(
        step_count=t,
        first_moment=m,
        second_moment=v,
        learning_rate=opt_state.learning_rate,
        decay1=opt_state.decay1,
        decay2=opt_state.decay2,
        epsilon=opt_state.epsilon,
    )
    return new_params, new_state


def schedule_factor(schedule: str, step: int, total_steps: int, warmup_fraction: float) -> float:
    """Learning-rate multiplier for the given 0-based step.

    "constant" is always 1; "linear" ramps up over the warmup fraction of
    the run and then decays linearly, staying strictly positive through
    the final step.
    """
    if schedule == "constant":
        return 1.0
    warm = max(1, round(warmup_fraction * total_steps))
    if step < warm:
        return (step + 1) / warm
    return (total_steps - step) / max(1, total_steps - warm)


@dataclass
class TrainedModel:
    """Vocabulary plus encoder parameters; embeds with dropout disabled."""

    vocab: Vocabulary
    params: EncoderParams

    def embed(self, sentence: str) -> np.ndarray:
        ids = _check_tokens(self.params, tokenize(self.vocab, sentence))
        return np.mean(self.params.embedding_table[ids], axis=0)


@dataclass
class TrainingReport:
    history: list[LossBreakdown]
    final: TrainedModel
    best: TrainedModel
    best_metric: float | None = None
    best_step: int | None = None
    eval_history: list[tuple[int, float]] = field(default_factory=list)


def _check_teacher_coverage(teachers: TeacherEnsemble, corpus: Corpus) -> None:
    for store in teachers.teachers:
        for sentence in corpus.sentences:
            if sentence not in store.embeddings:
                raise TeacherCoverageGap(
                    f"teacher {store.name!r} has no embedding for {sentence!r}"
                )


def train(
    config: RunConfig, corpus: Corpus, teachers: TeacherEnsemble | None
) -> TrainingReport:
    """Run the full objective over shuffled batches and report history.

    Per step: encode both dropout views, build the two student similarity
    matrices and the teacher score matrix, evaluate the combined loss,
    push its gradient into the embedding table, and apply one optimizer
    update.  If a validation pair set is configured, the model is scored
    (Spearman) every eval_interval steps and at the last step, and the
    best-scoring parameters are retained; otherwise best is final.
    """
    if not corpus.sentences:
        raise EmptyCorpus("training corpus is empty")
    if len(corpus.sentences) < 2:
        raise EmptyCorpus("training needs at least two sentences")
    if teachers is None and config.gamma != 0.0:
        raise TeacherCoverageGap("rank weight gamma > 0 requires a teacher")
    if teachers is not None:
        _check_teacher_coverage(teachers, corpus)

    vocab = build_vocab(corpus, config.min_count)
    params = init_params(len(vocab), config.dim, config.dropout_p, config.seed)
    opt_state = init_optimizer(
        params, config.learning_rate, config.decay1, config.decay2, config.epsilon
    )
    temps = Temperatures(tau1=config.tau1, tau2=config.tau2, tau3=config.tau3)
    weights = LossWeights(beta=config.beta, gamma=config.gamma, alpha=config.alpha)
    validation = load_sts_tsv(config.validation_sts) if config.validation_sts else None

    token_lists = [tokenize(vocab, s) for s in corpus.sentences]
    history: list[LossBreakdown] = []
    eval_history: list[tuple[int, float]] = []
    best_metric: float | None = None
    best_step: int | None = None
    best_table: np.ndarray | None = None

    def maybe_evaluate(step: int) -> None:
        nonlocal best_metric, best_step, best_table
        if validation is None:
            return
        model = TrainedModel(vocab=vocab, params=params)
        metric = evaluate_sts(model, validation)
        eval_history.append((step, metric))
        if best_metric is None or metric > best_metric:
            best_metric = metric
            best_step = step
            best_table = params.embedding_table.copy()

    step = 0
    epoch = 0
    while step < config.steps:
        progressed = False
        for batch in batch_iterator(corpus, config.batch_size, config.seed, epoch):
            if step >= config.steps:
                break
            progressed = True
            opt_state.learning_rate = config.learning_rate * schedule_factor(
                config.lr_schedule, step, config.steps, config.warmup_fraction
            )
            sentences = [corpus.sentences[i] for i in batch]
            views = encode_batch(
                params, [token_lists[i] for i in batch], config.seed, step
            )
            sim_ab = similarity_matrix(views.view_a, views.view_b)
            sim_ba = similarity_matrix(views.view_b, views.view_a)
            if teachers is not None and config.gamma != 0.0:
                teacher_scores = teacher_similarity_matrix(teachers, sentences)
            else:
                teacher_scores = np.zeros_like(sim_ab)
            breakdown, grad_ab, grad_ba = combined_loss(
                sim_ab, sim_ba, teacher_scores, temps, weights, config.rank_method
            )
            grad_table = backward_to_params(params, views, grad_ab, grad_ba)
            params, opt_state = optimizer_step(params, opt_state, grad_table)
            history.append(breakdown)
            step += 1
            if step % config.eval_interval == 0 or step == config.steps:
                maybe_evaluate(step)
        epoch += 1
        if not progressed:
            raise EmptyCorpus(
                f"corpus of {len(corpus.sentences)} sentences yields no batch "
                f"of size >= 2"
            )

    final = TrainedModel(vocab=vocab, params=params)
    if best_table is None:
        best = final
    else:
        best = TrainedModel(
            vocab=vocab,
            params=EncoderParams(
                vocab_size=params.vocab_size,
                dim=params.dim,
                embedding_table=best_table,
                dropout_p=params.dropout_p,
            ),
        )
    return TrainingReport(
        history=history,
        final=final,
        best=best,
        best_metric=best_metric,
        best_step=best_step,
        eval_history=eval_history,
    )


def save_checkpoint(path, model: TrainedModel) -> None:
    """Write magic, header, vocab listing, then the raw little-endian table."""
    table = model.params.embedding_table
    with open(path, "wb") as handle:
        handle.write(CHECKPOINT_MAGIC + b"\n")
        handle.write(f"{model.params.vocab_size} {model.params.dim}\n".encode("utf-8"))
        for token in model.vocab.id_to_token:
            handle.write(token.encode("utf-8") + b"\n")
        handle.write(np.ascontiguousarray(table, dtype="<f8").tobytes())


def load_checkpoint(path) -> TrainedModel:
    """Inverse of save_checkpoint; the loaded model embeds dropout-free."""
    with open(path, "rb") as handle:
        blob = handle.read()
    magic, sep, rest = blob.partition(b"\n")
    if magic != CHECKPOINT_MAGIC or not sep:
        raise FormatError(f"{path}: bad checkpoint magic {magic[:16]!r}")
    header, sep, rest = rest.partition(b"\n")
    try:
        vocab_size, dim = (int(v) for v in header.decode("utf-8").split())
    except (ValueError, UnicodeDecodeError):
        raise FormatError(f"{path}: bad checkpoint header {header!r}") from None
    if vocab_size < 1 or dim < 1:
        raise FormatError(f"{path}: nonpositive sizes in header {header!r}")
    tokens = []
    for _ in range(vocab_size):
        line, sep, rest = rest.partition(b"\n")
        if not sep:
            raise FormatError(f"{path}: truncated vocab listing")
        tokens.append(line.decode("utf-8"))
    expected = vocab_size * dim * 8
    if len(rest) != expected:
        raise FormatError(
            f"{path}: table payload is {len(rest)} bytes, expected {expected}"
        )
    table = np.frombuffer(rest, dtype="<f8").astype(np.float64).reshape(vocab_size, dim)
    vocab = Vocabulary(
        token_to_id={tok: i for i, tok in enumerate(tokens) if i != 0},
        id_to_token=tokens,
    )
    params = EncoderParams(
        vocab_size=vocab_size, dim=dim, embedding_table=table, dropout_p=0.0
    )
    return TrainedModel(vocab=vocab, params=params)
