"""Probabilistic pair scoring: comparators, weights, and EM estimation.

Each configured field comparator yields agree / disagree / missing for a
pair. Agreement adds log2(m/u) to the pair weight, disagreement adds
log2((1-m)/(1-u)), and missing fields contribute nothing. The overall
similarity score is the weight min-max-normalized over the pair's
non-missing fields, so scores stay comparable across missingness patterns:
1.0 means every observed field agreed, 0.0 means every observed field
disagreed, and a pair with no observed fields at all sits at 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import textsim
from .errors import ConfigError
from .records import FIELDS, RecordPair

AGREE = "agree"
DISAGREE = "disagree"
MISSING = "missing"

MATCH = "Match"
NONMATCH = "NonMatch"
POSSIBLE = "Possible"

_KINDS = ("jaro_winkler", "same_month_year", "exact", "edit_distance")


@dataclass(frozen=True)
class FieldComparator:
    """How one field is compared, with its m/u probabilities."""

    field: str
    kind: str
    m: float
    u: float
    threshold: float = 0.8   # jaro_winkler only
    max_edits: int = 2       # edit_distance only

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ConfigError(f"unknown field {self.field!r}")
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown comparator kind {self.kind!r}")
        if not (0.0 < self.m < 1.0 and 0.0 < self.u < 1.0):
            raise ConfigError(
                f"{self.field}: m and u must lie in (0,1), got m={self.m}, u={self.u}"
            )
        if self.m <= self.u:
            raise ConfigError(
                f"{self.field}: m must exceed u (agreement more likely under a "
                f"true match), got m={self.m}, u={self.u}"
            )
        if self.kind == "jaro_winkler" and not (0.0 <= self.threshold <= 1.0):
            raise ConfigError(f"{self.field}: threshold must lie in [0,1]")
        if self.kind == "edit_distance" and self.max_edits < 0:
            raise ConfigError(f"{self.field}: max_edits must be >= 0")

    @property
    def agree_weight(self) -> float:
        return math.log2(self.m / self.u)

    @property
    def disagree_weight(self) -> float:
        return math.log2((1.0 - self.m) / (1.0 - self.u))


@dataclass(frozen=True)
class ClassificationThresholds:
    """Lower/upper bounds of the ambiguity band on the overall score."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower < self.upper <= 1.0):
            raise ConfigError(
                f"need 0 <= lower < upper <= 1, got ({self.lower}, {self.upper})"
            )

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2.0


@dataclass(frozen=True)
class ScoredPair:
    """A candidate pair with its agreement vector, weight and score."""

    pair: RecordPair
    vector: tuple[str, ...]
    total_weight: float
    overall_score: float


def default_comparators() -> tuple[FieldComparator, ...]:
    """The shipped comparator table.

    Names compare by Jaro-Winkler at 0.8, birth dates agree on equal month
    and year, sex exactly, SSN within 2 edits or transpositions. The m/u
    values are engineering defaults meant to be re-estimated with EM on
    generated data.
    """
    name_mu = {"m": 0.92, "u": 0.004}
    return (
        FieldComparator("first_name", "jaro_winkler", threshold=0.8, **name_mu),
        FieldComparator("middle_name", "jaro_winkler", threshold=0.8, **name_mu),
        FieldComparator("last_name", "jaro_winkler", threshold=0.8, **name_mu),
        FieldComparator("birth_date", "same_month_year", m=0.97, u=0.003),
        FieldComparator("sex", "exact", m=0.98, u=0.5),
        FieldComparator("ssn", "edit_distance", max_edits=2, m=0.95, u=1e-6),
        FieldComparator("address", "jaro_winkler", threshold=0.8, m=0.7, u=0.01),
    )


def _compare_one(comp: FieldComparator, left_val, right_val) -> str:
    if left_val is None or right_val is None:
        return MISSING
    if comp.kind == "jaro_winkler":
        agree = textsim.jaro_winkler(left_val, right_val) >= comp.threshold
    elif comp.kind == "same_month_year":
        agree = (left_val.year, left_val.month) == (right_val.year, right_val.month)
    elif comp.kind == "exact":
        agree = left_val == right_val
    else:  # edit_distance
        agree = textsim.damerau_levenshtein(left_val, right_val) <= comp.max_edits
    return AGREE if agree else DISAGREE


def compare_fields(pair: RecordPair,
                   config: tuple[FieldComparator, ...]) -> tuple[str, ...]:
    """Agreement vector for a pair under a comparator configuration."""
    if not config:
        raise ConfigError("comparator configuration is empty")
    return tuple(
        _compare_one(c, pair.left.field(c.field), pair.right.field(c.field))
        for c in config
    )


def build_weight_table(config) -> tuple[tuple[float, float], ...]:
    """Per-comparator (agree_weight, disagree_weight) pairs, in config order."""
    return tuple((c.agree_weight, c.disagree_weight) for c in config)


def score_with_table(vector, table) -> tuple[float, float]:
    """Total weight and min-max-normalized score from an explicit weight table.

    Exposed separately so properties like scale invariance can be asserted
    by rescaling the table directly.
    """
    total = 0.0
    w_max = 0.0
    w_min = 0.0
    observed = 0
    for outcome, (w_agree, w_disagree) in zip(vector, table):
        if outcome == MISSING:
            continue
        observed += 1
        w_max += w_agree
        w_min += w_disagree
        total += w_agree if outcome == AGREE else w_disagree
    if observed == 0:
        return 0.0, 0.5
    return total, (total - w_min) / (w_max - w_min)


def score_vector(vector, config) -> tuple[float, float]:
    """(total_weight, overall_score) for an agreement vector."""
    return score_with_table(vector, build_weight_table(config))


def score_pair(pair: RecordPair, config) -> ScoredPair:
    """Compare and score one pair."""
    vector = compare_fields(pair, config)
    total, overall = score_vector(vector, config)
    return ScoredPair(pair=pair, vector=vector,
                      total_weight=total, overall_score=overall)


def classify(overall_score: float, thresholds: ClassificationThresholds) -> str:
    """Match at or above the upper bound, NonMatch at or below the lower,
    Possible in the open band between them."""
    if overall_score >= thresholds.upper:
        return MATCH
    if overall_score <= thresholds.lower:
        return NONMATCH
    return POSSIBLE


@dataclass(frozen=True)
class EMEstimate:
    """Result of EM parameter estimation over agreement vectors."""

    m: tuple[float, ...]
    u: tuple[float, ...]
    pi: float
    iterations: int
    log_likelihood: float
    ll_history: tuple[float, ...]
    converged: bool
    degenerate: bool
    field_names: tuple[str, ...] = dc_field(default=())


_CLAMP_LO = 1e-6
_CLAMP_HI = 1.0 - 1e-6


def _vectors_to_array(vectors) -> np.ndarray:
    mapping = {AGREE: 1, DISAGREE: 0, MISSING: -1}
    try:
        return np.array(
            [[mapping[o] for o in vec] for vec in vectors], dtype=np.int8
        )
    except KeyError as exc:
        raise ConfigError(f"unknown outcome {exc.args[0]!r} in vectors") from None


def _log_likelihood_terms(arr, m, u, pi):
    observed = arr >= 0
    a = (arr == 1)
    # Sum per-field Bernoulli log-terms over observed fields only.
    log_m = np.where(a, np.log(m), np.log1p(-m))
    log_u = np.where(a, np.log(u), np.log1p(-u))
    lp_match = np.log(pi) + np.where(observed, log_m, 0.0).sum(axis=1)
    lp_non = np.log1p(-pi) + np.where(observed, log_u, 0.0).sum(axis=1)
    return lp_match, lp_non


def estimate_params_em(vectors, init=(0.8, 0.2, 0.1), tol=1e-6,
                       max_iter=100, field_names=()) -> EMEstimate:
    """Fit the two-class conditional-independence mixture by EM.

    Missing outcomes are excluded from their field's likelihood term.
    Iteration stops when the log-likelihood improvement falls below ``tol``
    or ``max_iter`` is reached; hitting the cap flags the result as
    non-converged rather than raising. Parameters are clamped to
    [1e-6, 1-1e-6]; any clamp flags the estimate degenerate.
    """
    arr = _vectors_to_array(vectors)
    if arr.shape[0] < 2:
        raise ConfigError("EM needs at least 2 agreement vectors")
    n_fields = arr.shape[1]

    m0, u0, pi0 = init
    for name, val in (("m0", m0), ("u0", u0), ("pi0", pi0)):
        if not (0.0 < val < 1.0):
            raise ConfigError(f"{name} must lie in (0,1), got {val}")

    m = np.full(n_fields, float(m0))
    u = np.full(n_fields, float(u0))
    pi = float(pi0)

    observed = arr >= 0
    agree = (arr == 1).astype(float)
    obs_f = observed.astype(float)

    lp_match, lp_non = _log_likelihood_terms(arr, m, u, pi)
    ll_prev = float(np.logaddexp(lp_match, lp_non).sum())

    history: list[float] = []
    degenerate = False
    converged = False
    iterations = 0

    for _ in range(max_iter):
        iterations += 1
        # E-step: posterior match responsibilities.
        gamma = np.exp(lp_match - np.logaddexp(lp_match, lp_non))

        # M-step: responsibility-weighted agreement frequencies.
        g = gamma[:, None]
        denom_m = (g * obs_f).sum(axis=0)
        denom_u = ((1.0 - g) * obs_f).sum(axis=0)
        num_m = (g * agree * obs_f).sum(axis=0)
        num_u = ((1.0 - g) * agree * obs_f).sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            m_new = np.where(denom_m > 0, num_m / np.maximum(denom_m, 1e-300), m)
            u_new = np.where(denom_u > 0, num_u / np.maximum(denom_u, 1e-300), u)
        m_clamped = np.clip(m_new, _CLAMP_LO, _CLAMP_HI)
        u_clamped = np.clip(u_new, _CLAMP_LO, _CLAMP_HI)
        if not (np.array_equal(m_clamped, m_new) and np.array_equal(u_clamped, u_new)):
            degenerate = True
        m, u = m_clamped, u_clamped
        pi = float(np.clip(gamma.mean(), _CLAMP_LO, _CLAMP_HI))

        lp_match, lp_non = _log_likelihood_terms(arr, m, u, pi)
        ll = float(np.logaddexp(lp_match, lp_non).sum())
        history.append(ll)
        if ll - ll_prev < tol:
            converged = True
            ll_prev = ll
            break
        ll_prev = ll

    return EMEstimate(
        m=tuple(float(x) for x in m),
        u=tuple(float(x) for x in u),
        pi=pi,
        iterations=iterations,
        log_likelihood=ll_prev,
        ll_history=tuple(history),
        converged=converged,
        degenerate=degenerate,
        field_names=tuple(field_names),
    )
