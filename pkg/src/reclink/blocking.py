"""Candidate-pair generation: rule keys, embedding KNN, and the hybrid band.

All three strategies emit a deduplicated CandidatePairSet whose pairs
remember which rule or retrieval produced them. Iteration order is always
sorted by (left_id, right_id) so downstream output is deterministic
regardless of how pairs were discovered.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from . import textsim
from .errors import ConfigError, DataError
from .fellegi_sunter import ClassificationThresholds, score_pair
from .records import Dataset, PatientRecord, RecordPair
from .serialize import serialize_for_blocking

RULE_KINDS = ("soundex_first_last", "exact_birth_date", "exact_ssn")


@dataclass(frozen=True)
class KnnParams:
    """Retrieval depth and cosine threshold for embedding blocking."""

    k: int
    tau: float

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not (0.0 <= self.tau <= 1.0):
            raise ConfigError(f"tau must lie in [0,1], got {self.tau}")


@dataclass
class CandidatePair:
    left_id: str
    right_id: str
    provenance: tuple[str, ...]
    score: float | None = None


class CandidatePairSet:
    """Deduplicated set of (A,B) pair references with provenance tags."""

    def __init__(self):
        self._pairs: dict[tuple[str, str], CandidatePair] = {}

    def add(self, left_id: str, right_id: str, tag: str,
            score: float | None = None) -> None:
        key = (left_id, right_id)
        existing = self._pairs.get(key)
        if existing is None:
            self._pairs[key] = CandidatePair(left_id, right_id, (tag,), score)
            return
        if tag not in existing.provenance:
            existing.provenance = existing.provenance + (tag,)
        if score is not None:
            existing.score = score if existing.score is None else max(existing.score, score)

    def set_score(self, left_id: str, right_id: str, score: float) -> None:
        self._pairs[(left_id, right_id)].score = score

    def __len__(self) -> int:
        return len(self._pairs)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._pairs

    def __iter__(self):
        return iter(sorted(self._pairs.values(),
                           key=lambda p: (p.left_id, p.right_id)))

    def keys(self) -> set[tuple[str, str]]:
        return set(self._pairs)

    def get(self, key: tuple[str, str]) -> CandidatePair | None:
        return self._pairs.get(key)


def _soundex_first_last_key(r: PatientRecord):
    if r.first_name is None or r.last_name is None:
        return None
    first, last = textsim.soundex(r.first_name), textsim.soundex(r.last_name)
    if first == "0000" or last == "0000":
        return None
    return (first, last)


def _exact_birth_date_key(r: PatientRecord):
    return r.birth_date.isoformat() if r.birth_date is not None else None


def _exact_ssn_key(r: PatientRecord):
    return r.ssn


_KEY_FUNCS = {
    "soundex_first_last": _soundex_first_last_key,
    "exact_birth_date": _exact_birth_date_key,
    "exact_ssn": _exact_ssn_key,
}


def block_by_rules(a: Dataset, b: Dataset, rules) -> CandidatePairSet:
    """Union of all cross-source pairs sharing a key under any rule.

    A record missing a key's fields joins no block for that rule. Pairs
    found by several rules appear once, tagged with every contributing rule.
    """
    if not rules:
        raise ConfigError("rule list is empty")
    for rule in rules:
        if rule not in _KEY_FUNCS:
            raise ConfigError(f"unknown blocking rule {rule!r}")

    pairs = CandidatePairSet()
    for rule in rules:
        key_func = _KEY_FUNCS[rule]
        index_b: dict = {}
        for rec in b.records:
            key = key_func(rec)
            if key is not None:
                index_b.setdefault(key, []).append(rec.record_id)
        for rec in a.records:
            key = key_func(rec)
            if key is None:
                continue
            for right_id in index_b.get(key, ()):
                pairs.add(rec.record_id, right_id, rule)
    return pairs


def knn_retrieve(emb_a: np.ndarray, emb_b: np.ndarray,
                 ids_a, ids_b, params: KnnParams) -> CandidatePairSet:
    """Exact top-k cosine retrieval over precomputed unit-norm embeddings.

    Every A-row queries all B-rows; the k best (ties broken toward the
    smaller B index) are kept when their cosine strictly exceeds tau.
    """
    k = params.k
    if k > emb_b.shape[0]:
        warnings.warn(
            f"k={k} exceeds |B|={emb_b.shape[0]}; clamping", stacklevel=2
        )
        k = emb_b.shape[0]

    pairs = CandidatePairSet()
    if emb_b.shape[0] == 0:
        return pairs
    sims = emb_a @ emb_b.T
    # Stable argsort of descending similarity keeps the smaller B index first
    # among exact ties.
    order = np.argsort(-sims, axis=1, kind="stable")[:, :k]
    for i in range(sims.shape[0]):
        for j in order[i]:
            sim = float(sims[i, j])
            if sim > params.tau:
                pairs.add(ids_a[i], ids_b[int(j)], "knn", score=sim)
    return pairs


def block_by_knn(a: Dataset, b: Dataset, provider,
                 params: KnnParams) -> CandidatePairSet:
    """Serialize, embed and retrieve: the embedding-blocking pipeline."""
    emb_a = provider.embed_texts([serialize_for_blocking(r) for r in a.records])
    emb_b = provider.embed_texts([serialize_for_blocking(r) for r in b.records])
    ids_a = [r.record_id for r in a.records]
    ids_b = [r.record_id for r in b.records]
    return knn_retrieve(emb_a, emb_b, ids_a, ids_b, params)


def hybrid_block(a: Dataset, b: Dataset, rules, fs_config,
                 band: ClassificationThresholds):
    """Rule-block, score every candidate, and split on the ambiguity band.

    Returns (auto_matches, auto_nonmatches_count, escalated): pairs scoring
    at or above the band's upper bound are accepted outright, pairs at or
    below the lower bound are counted and dropped, and the interior is
    escalated for downstream matching or review. Scores are attached to the
    surviving pairs.
    """
    candidates = block_by_rules(a, b, rules)
    lookup_a = a.by_id()
    lookup_b = b.by_id()

    auto_matches = CandidatePairSet()
    escalated = CandidatePairSet()
    auto_nonmatches = 0
    for cand in candidates:
        pair = RecordPair(lookup_a[cand.left_id], lookup_b[cand.right_id])
        scored = score_pair(pair, fs_config)
        target = None
        if scored.overall_score >= band.upper:
            target = auto_matches
        elif scored.overall_score <= band.lower:
            auto_nonmatches += 1
        else:
            target = escalated
        if target is not None:
            for tag in cand.provenance:
                target.add(cand.left_id, cand.right_id, tag)
            target.set_score(cand.left_id, cand.right_id, scored.overall_score)
    return auto_matches, auto_nonmatches, escalated


def write_pairs_csv(pairs: CandidatePairSet, path) -> None:
    """Export: left_id, right_id, provenance (';'-joined), score (may be empty)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["left_id", "right_id", "provenance", "score"])
        for p in pairs:
            writer.writerow([
                p.left_id, p.right_id, ";".join(p.provenance),
                "" if p.score is None else repr(p.score),
            ])


def read_pairs_csv(path) -> CandidatePairSet:
    """Read a pair CSV produced by write_pairs_csv."""
    pairs = CandidatePairSet()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"left_id", "right_id", "provenance", "score"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise DataError(
                f"pair file is missing columns: {sorted(missing)}", path=str(path)
            )
        for i, row in enumerate(reader, start=1):
            score = float(row["score"]) if row["score"] else None
            for tag in row["provenance"].split(";"):
                pairs.add(row["left_id"], row["right_id"], tag, score=score)
    return pairs
