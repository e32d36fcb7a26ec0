"""Blocking and matching metrics against ground truth, plus the K-tau sweep.

Blocking quality is pairs completeness (recall over true pairs) against
pair-count reduction; matching quality is the standard confusion over
decided pairs with F1 on the match class. The sweep runs the embedding
blocker over a k x tau lattice, reusing the embeddings across all points.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .blocking import CandidatePairSet, KnnParams, knn_retrieve
from .errors import ConfigError, DataError
from .fellegi_sunter import MATCH, NONMATCH
from .records import Dataset
from .serialize import serialize_for_blocking

# Default sweep lattice: the retrieval depths and threshold range explored
# in the source experiments.
DEFAULT_K_SET = (5, 10, 20, 30)
DEFAULT_TAU_SET = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


@dataclass(frozen=True)
class BlockingReport:
    candidate_count: int
    true_matches_total: int
    true_matches_missed: int
    pairs_completeness: float | None  # None when truth is empty
    reduction_vs_cross: float
    reduction_vs_baseline: float | None = None


@dataclass(frozen=True)
class MatchingReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class SweepRow:
    k: int
    tau: float
    candidate_count: int
    missed: int
    pairs_completeness: float | None


@dataclass(frozen=True)
class SweepGrid:
    rows: tuple[SweepRow, ...]


def eval_blocking(pairs: CandidatePairSet, truth, n_a: int, n_b: int,
                  baseline_count: int | None = None) -> BlockingReport:
    """Recall and reduction of a candidate set.

    reduction_vs_cross compares against the full |A| x |B| cross product;
    reduction_vs_baseline against a supplied reference pair count (e.g. a
    prior linkage run).
    """
    if baseline_count is not None and baseline_count == 0:
        raise ConfigError("baseline_count must be positive")
    truth = set(truth)
    found = pairs.keys()
    missed = len(truth - found)
    completeness = None
    if truth:
        completeness = 1.0 - missed / len(truth)
    cross = n_a * n_b
    reduction_cross = 1.0 - len(pairs) / cross if cross else 0.0
    reduction_base = None
    if baseline_count is not None:
        reduction_base = 1.0 - len(pairs) / baseline_count
    return BlockingReport(
        candidate_count=len(pairs),
        true_matches_total=len(truth),
        true_matches_missed=missed,
        pairs_completeness=completeness,
        reduction_vs_cross=reduction_cross,
        reduction_vs_baseline=reduction_base,
    )


def eval_matching(decisions, truth) -> MatchingReport:
    """Confusion counts over decided pairs; F1 on the match class.

    Decided pairs absent from truth count as true non-matches. A pair
    decided twice is a data error.
    """
    truth = set(truth)
    seen: set[tuple[str, str]] = set()
    tp = fp = fn = tn = 0
    for d in decisions:
        key = (d.left_id, d.right_id)
        if key in seen:
            raise DataError(f"duplicate decision for pair {key}")
        seen.add(key)
        is_true = key in truth
        if d.verdict == MATCH:
            tp += is_true
            fp += not is_true
        elif d.verdict == NONMATCH:
            fn += is_true
            tn += not is_true
        else:
            raise DataError(f"unknown verdict {d.verdict!r} for pair {key}")
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom else 0.0
    return MatchingReport(tp=tp, fp=fp, fn=fn, tn=tn,
                          precision=precision, recall=recall, f1=f1)


def run_sweep(a: Dataset, b: Dataset, provider, k_set, tau_set,
              truth) -> SweepGrid:
    """One blocking evaluation per (k, tau) lattice point.

    Embeddings and the similarity matrix are computed once and shared by
    every point; rows come out in (k, tau) iteration order.
    """
    if not k_set or not tau_set:
        raise ConfigError("k_set and tau_set must be non-empty")
    emb_a = provider.embed_texts([serialize_for_blocking(r) for r in a.records])
    emb_b = provider.embed_texts([serialize_for_blocking(r) for r in b.records])
    ids_a = [r.record_id for r in a.records]
    ids_b = [r.record_id for r in b.records]
    truth = set(truth)

    rows = []
    for k in k_set:
        for tau in tau_set:
            pairs = knn_retrieve(emb_a, emb_b, ids_a, ids_b,
                                 KnnParams(k=k, tau=tau))
            report = eval_blocking(pairs, truth, len(a), len(b))
            rows.append(SweepRow(
                k=k, tau=tau,
                candidate_count=report.candidate_count,
                missed=report.true_matches_missed,
                pairs_completeness=report.pairs_completeness,
            ))
    return SweepGrid(rows=tuple(rows))


def write_sweep_csv(grid: SweepGrid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "tau", "candidate_count", "missed",
                         "pairs_completeness"])
        for row in grid.rows:
            writer.writerow([
                row.k, repr(row.tau), row.candidate_count, row.missed,
                "" if row.pairs_completeness is None
                else repr(row.pairs_completeness),
            ])


def write_sweep_long(grid: SweepGrid, path) -> None:
    """Long-format plot data: one (k, tau, metric, value) row per cell."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "tau", "metric", "value"])
        for row in grid.rows:
            writer.writerow([row.k, repr(row.tau), "candidate_count",
                             row.candidate_count])
            writer.writerow([row.k, repr(row.tau), "missed", row.missed])
            if row.pairs_completeness is not None:
                writer.writerow([row.k, repr(row.tau), "pairs_completeness",
                                 repr(row.pairs_completeness)])


def blocking_report_dict(report: BlockingReport) -> dict:
    return {
        "candidate_count": report.candidate_count,
        "true_matches_total": report.true_matches_total,
        "true_matches_missed": report.true_matches_missed,
        "pairs_completeness": report.pairs_completeness,
        "reduction_vs_cross": report.reduction_vs_cross,
        "reduction_vs_baseline": report.reduction_vs_baseline,
    }


def matching_report_dict(report: MatchingReport) -> dict:
    return {
        "tp": report.tp, "fp": report.fp, "fn": report.fn, "tn": report.tn,
        "fp_plus_fn": report.fp + report.fn,
        "precision": report.precision, "recall": report.recall,
        "f1": report.f1,
    }
