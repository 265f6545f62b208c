"""Command-line entry points: train, evaluate, export, geometry report.

Exit codes: 0 ok, 2 config/usage error, 3 data or I/O error, 4 empty
result (no ranking groups, no positive pairs, or degenerate predictions).
All numeric output uses exactly five decimal places.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import parse_config
from .data_io import load_corpus, load_sts_tsv
from .encoder import TrainedModel, load_checkpoint, save_checkpoint, train
from .errors import (
    ConfigError,
    DegenerateInput,
    DuplicateKey,
    EmptyCorpus,
    EmptyInput,
    FormatError,
    PoolTooSmall,
    RankDistillError,
    ScoreOutOfRange,
    TeacherCoverageGap,
    ZeroVector,
)
from .metrics import (
    EvalPairSet,
    alignment,
    build_ranking_groups,
    evaluate_ranking,
    evaluate_sts,
    uniformity,
)
from .teacher import TeacherEnsemble, TeacherStore, load_teacher, save_teacher
from .vectors import cosine_similarity

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_EMPTY = 4

_DATA_ERRORS = (
    FileNotFoundError,
    UnicodeDecodeError,
    FormatError,
    ScoreOutOfRange,
    DuplicateKey,
    EmptyCorpus,
    TeacherCoverageGap,
    ZeroVector,
)
_EMPTY_ERRORS = (EmptyInput, PoolTooSmall, DegenerateInput)


def _fmt(value: float) -> str:
    return f"{value:.5f}"


def cmd_train(args) -> int:
    config = parse_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.method is not None:
        config.rank_method = args.method
    config.validate()

    teacher_paths = args.teacher or []
    if len(teacher_paths) > 2:
        raise ConfigError("at most two teachers are supported")
    if config.gamma != 0.0 and not teacher_paths:
        raise ConfigError("rank weight gamma > 0 requires at least one --teacher")

    corpus = load_corpus(args.corpus)
    ensemble = None
    if teacher_paths:
        stores = [load_teacher(p) for p in teacher_paths]
        ensemble = TeacherEnsemble(teachers=stores, alpha=config.alpha)

    report = train(config, corpus, ensemble)
    save_checkpoint(args.out, report.best)

    lines = [
        f"steps: {len(report.history)}",
        f"rank_method: {config.rank_method}",
        f"seed: {config.seed}",
    ]
    if report.history:
        last = report.history[-1]
        lines += [
            f"final_info_nce: {_fmt(last.info_nce)}",
            f"final_consistency: {_fmt(last.consistency)}",
            f"final_rank: {_fmt(last.rank)}",
            f"final_total: {_fmt(last.total)}",
        ]
    if report.best_metric is not None:
        lines += [
            f"best_step: {report.best_step}",
            f"best_validation_spearman: {_fmt(report.best_metric)}",
        ]
    lines.append(f"checkpoint: {args.out}")
    report_path = str(args.out) + ".report"
    Path(report_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return EXIT_OK


def cmd_eval_sts(args) -> int:
    model = load_checkpoint(args.checkpoint)
    scores = []
    for path in args.sts:
        examples = load_sts_tsv(path)
        rho = evaluate_sts(model, examples)
        scores.append(rho)
        print(f"{Path(path).stem}\t{_fmt(rho)}")
    print(f"avg\t{_fmt(sum(scores) / len(scores))}")
    return EXIT_OK


def cmd_eval_rank(args) -> int:
    model = load_checkpoint(args.checkpoint)
    groups = build_ranking_groups(load_sts_tsv(args.sts))
    if not groups:
        print("no ranking group has more than three targets", file=sys.stderr)
        return EXIT_EMPTY
    kcc, ndcg_value = evaluate_ranking(model, groups)
    print(f"kcc\t{_fmt(kcc)}")
    print(f"ndcg\t{_fmt(ndcg_value)}")
    print(f"groups\t{len(groups)}")
    return EXIT_OK


def cmd_export_embeddings(args) -> int:
    model = load_checkpoint(args.checkpoint)
    corpus = load_corpus(args.corpus, deduplicate=True)
    if not corpus.sentences:
        raise EmptyCorpus(f"{args.corpus}: no sentences to export")
    store = TeacherStore(name=str(args.out), dim=model.params.dim)
    for sentence in corpus.sentences:
        store.embeddings[sentence] = model.embed(sentence)
    save_teacher(args.out, store)
    print(f"exported\t{len(store)}")
    return EXIT_OK


def cmd_report_geometry(args) -> int:
    model = load_checkpoint(args.checkpoint)
    examples = load_sts_tsv(args.sts)
    positives = [ex for ex in examples if ex.gold >= args.align_threshold]
    if not positives:
        print(
            f"no pair reaches the positive threshold {args.align_threshold}",
            file=sys.stderr,
        )
        return EXIT_EMPTY
    pairs = [(model.embed(ex.sentence1), model.embed(ex.sentence2)) for ex in positives]
    pool_sentences = list(
        dict.fromkeys(s for ex in examples for s in (ex.sentence1, ex.sentence2))
    )
    pool = [model.embed(s) for s in pool_sentences]
    print(f"align\t{_fmt(alignment(EvalPairSet(positive_pairs=pairs)))}")
    print(f"uniform\t{_fmt(uniformity(EvalPairSet(pool=pool)))}")
    if args.hist_out:
        _write_cosine_histogram(args.hist_out, model, examples)
    return EXIT_OK


def _write_cosine_histogram(path, model: TrainedModel, examples, bins: int = 20) -> None:
    """Per gold bucket ([0,1) .. [4,5]), counts of pair cosines in fixed bins."""
    import numpy as np

    edges = np.linspace(-1.0, 1.0, bins + 1)
    buckets: dict[int, list[float]] = {b: [] for b in range(5)}
    for ex in examples:
        bucket = min(int(ex.gold), 4)
        buckets[bucket].append(
            cosine_similarity(model.embed(ex.sentence1), model.embed(ex.sentence2))
        )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("bucket\tbin_lo\tbin_hi\tcount\n")
        for bucket in range(5):
            counts, _ = np.histogram(buckets[bucket], bins=edges)
            for k in range(bins):
                handle.write(
                    f"{bucket}-{bucket + 1}\t{_fmt(edges[k])}\t{_fmt(edges[k + 1])}"
                    f"\t{int(counts[k])}\n"
                )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankdistill",
        description="Train and evaluate ranking-preserving sentence embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train an encoder against frozen teachers")
    p_train.add_argument("--config", required=True, help="key = value config file")
    p_train.add_argument("--corpus", required=True, help="one sentence per line")
    p_train.add_argument(
        "--teacher", action="append", default=[], help="teacher file (repeat, max 2)"
    )
    p_train.add_argument("--out", required=True, help="checkpoint output path")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--method", choices=["listnet", "listmle"], default=None)
    p_train.set_defaults(func=cmd_train)

    p_sts = sub.add_parser("eval-sts", help="Spearman correlation on labeled pairs")
    p_sts.add_argument("--checkpoint", required=True)
    p_sts.add_argument("--sts", action="append", required=True, help="TSV (repeatable)")
    p_sts.set_defaults(func=cmd_eval_sts)

    p_rank = sub.add_parser("eval-rank", help="ranking metrics over query groups")
    p_rank.add_argument("--checkpoint", required=True)
    p_rank.add_argument("--sts", required=True)
    p_rank.set_defaults(func=cmd_eval_rank)

    p_export = sub.add_parser(
        "export-embeddings", help="write corpus embeddings in the teacher format"
    )
    p_export.add_argument("--checkpoint", required=True)
    p_export.add_argument("--corpus", required=True)
    p_export.add_argument("--out", required=True)
    p_export.set_defaults(func=cmd_export_embeddings)

    p_geo = sub.add_parser(
        "report-geometry", help="alignment/uniformity of the embedding space"
    )
    p_geo.add_argument("--checkpoint", required=True)
    p_geo.add_argument("--sts", required=True)
    p_geo.add_argument(
        "--align-threshold",
        type=float,
        default=4.0,
        help="gold score at or above which a pair counts as positive",
    )
    p_geo.add_argument("--hist-out", default=None, help="optional cosine histogram TSV")
    p_geo.set_defaults(func=cmd_report_geometry)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _EMPTY_ERRORS as exc:
        print(f"empty result: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RankDistillError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
