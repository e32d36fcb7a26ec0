"""Pair classification via pluggable matchers and the escalation cascade.

Pairs whose overall similarity falls outside the ambiguity band are decided
probabilistically; interior pairs escalate to an LLM endpoint, a human
review queue, or a default non-match according to policy. LLM failures
fail open into the human queue: in a registry setting a silently dropped
match is the expensive error.
"""

from __future__ import annotations

import csv
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .blocking import CandidatePairSet
from .errors import ConfigError, TransportError, UnparseableResponse
from .fellegi_sunter import (
    MATCH,
    NONMATCH,
    ClassificationThresholds,
    score_pair,
)
from .records import Dataset, RecordPair
from .serialize import render_match_prompt

STAGE_DETERMINISTIC = "Deterministic"
STAGE_PROBABILISTIC = "Probabilistic"
STAGE_LLM = "Llm"
STAGE_HUMAN = "Human"

ESCALATION_TARGETS = ("llm", "human_queue", "nonmatch_default")

DEFAULT_SYSTEM_PROMPT = "You are a helpful assistant"

_LEADING_TOKEN_RE = re.compile(r"[a-zA-Z]+")


@dataclass(frozen=True)
class MatchDecision:
    """One binary verdict with its deciding stage and audit trail."""

    left_id: str
    right_id: str
    verdict: str
    stage: str
    score: float | None = None
    raw_response: str | None = None


@dataclass(frozen=True)
class LlmEndpointConfig:
    """Chat-completions endpoint settings.

    temperature defaults to 0 for deterministic decoding. system_prompt
    None omits the system message entirely (the recommended setup for
    reasoning models, which also want temperature 0.6 and a longer
    timeout; that is configuration here, nothing more).
    """

    url: str
    model: str
    temperature: float = 0.0
    system_prompt: str | None = DEFAULT_SYSTEM_PROMPT
    max_retries: int = 2
    timeout_ms: int = 30_000
    max_tokens: int = 8

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_retries < 0:
            raise ConfigError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.timeout_ms <= 0:
            raise ConfigError(f"timeout_ms must be positive, got {self.timeout_ms}")


@dataclass(frozen=True)
class CascadePolicy:
    """Ambiguity band plus where interior pairs go."""

    band: ClassificationThresholds
    escalation_target: str = "human_queue"

    def __post_init__(self):
        if self.escalation_target not in ESCALATION_TARGETS:
            raise ConfigError(
                f"unknown escalation target {self.escalation_target!r}"
            )


def match_deterministic(pair: RecordPair) -> MatchDecision:
    """Exact-identifier rule: first name, last name and full birth date must
    all be present on both sides and equal. Brittle by design; kept as the
    baseline stage."""
    left, right = pair.left, pair.right
    required = ("first_name", "last_name", "birth_date")
    is_match = all(
        left.field(f) is not None
        and right.field(f) is not None
        and left.field(f) == right.field(f)
        for f in required
    )
    return MatchDecision(
        left_id=left.record_id, right_id=right.record_id,
        verdict=MATCH if is_match else NONMATCH,
        stage=STAGE_DETERMINISTIC,
    )


def match_probabilistic(pair: RecordPair, fs_config, cutoff: float) -> MatchDecision:
    """Match when the overall similarity score reaches the cutoff."""
    if not (0.0 <= cutoff <= 1.0):
        raise ConfigError(f"cutoff must lie in [0,1], got {cutoff}")
    scored = score_pair(pair, fs_config)
    return MatchDecision(
        left_id=pair.left.record_id, right_id=pair.right.record_id,
        verdict=MATCH if scored.overall_score >= cutoff else NONMATCH,
        stage=STAGE_PROBABILISTIC,
        score=scored.overall_score,
    )


def _parse_yes_no(raw: str) -> str | None:
    match = _LEADING_TOKEN_RE.search(raw)
    if match is None:
        return None
    token = match.group(0).lower()
    if token == "yes":
        return MATCH
    if token == "no":
        return NONMATCH
    return None


def _post_chat(client: httpx.Client, cfg: LlmEndpointConfig, prompt: str,
               pair_id: str) -> str:
    messages = []
    if cfg.system_prompt is not None:
        messages.append({"role": "system", "content": cfg.system_prompt})
    messages.append({"role": "user", "content": prompt})
    payload = {
        "model": cfg.model,
        "messages": messages,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }
    try:
        resp = client.post(cfg.url, json=payload)
    except httpx.HTTPError as exc:
        raise TransportError(f"LLM endpoint failed for pair {pair_id}: {exc}") from exc
    if resp.status_code != 200:
        raise TransportError(
            f"LLM endpoint returned HTTP {resp.status_code} for pair {pair_id}"
        )
    try:
        return resp.json()["choices"][0]["message"]["content"]
    except (KeyError, IndexError, ValueError) as exc:
        raise TransportError(
            f"malformed LLM response for pair {pair_id}: {exc}"
        ) from exc


def match_llm(pair: RecordPair, cfg: LlmEndpointConfig,
              client: httpx.Client | None = None) -> MatchDecision:
    """Ask the endpoint for a yes/no verdict on the rendered match prompt.

    The response's leading alphabetic token decides (case-insensitive,
    surrounding whitespace and punctuation ignored). Anything else is
    retried up to max_retries and then raised as UnparseableResponse; the
    raw text is preserved for audit either way.
    """
    pair_id = f"{pair.left.record_id}|{pair.right.record_id}"
    prompt = render_match_prompt(pair)
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=cfg.timeout_ms / 1000.0)
    try:
        raw = ""
        for _ in range(cfg.max_retries + 1):
            raw = _post_chat(client, cfg, prompt, pair_id)
            verdict = _parse_yes_no(raw)
            if verdict is not None:
                return MatchDecision(
                    left_id=pair.left.record_id, right_id=pair.right.record_id,
                    verdict=verdict, stage=STAGE_LLM, raw_response=raw,
                )
        raise UnparseableResponse(pair_id, raw)
    finally:
        if own_client:
            client.close()


def match_cascade(pairs: CandidatePairSet, a: Dataset, b: Dataset,
                  policy: CascadePolicy, fs_config,
                  llm_cfg: LlmEndpointConfig | None = None,
                  parallelism: int = 1):
    """Score all pairs, auto-decide outside the band, escalate the interior.

    Returns (decisions, queued): every input pair lands in exactly one of
    the two, decisions sorted by pair id regardless of completion order.
    Interior pairs go to the LLM, the human queue, or a default NonMatch per
    policy; LLM failures put the pair in the queue instead of deciding it.
    """
    if policy.escalation_target == "llm" and llm_cfg is None:
        raise ConfigError("escalation target is llm but no endpoint configured")

    lookup_a = a.by_id()
    lookup_b = b.by_id()
    band = policy.band

    decisions: list[MatchDecision] = []
    queued: list[tuple[str, str]] = []
    interior: list[RecordPair] = []

    for cand in pairs:
        pair = RecordPair(lookup_a[cand.left_id], lookup_b[cand.right_id])
        scored = score_pair(pair, fs_config)
        if scored.overall_score >= band.upper or scored.overall_score <= band.lower:
            decisions.append(MatchDecision(
                left_id=cand.left_id, right_id=cand.right_id,
                verdict=MATCH if scored.overall_score >= band.upper else NONMATCH,
                stage=STAGE_PROBABILISTIC, score=scored.overall_score,
            ))
        elif policy.escalation_target == "human_queue":
            queued.append((cand.left_id, cand.right_id))
        elif policy.escalation_target == "nonmatch_default":
            decisions.append(MatchDecision(
                left_id=cand.left_id, right_id=cand.right_id,
                verdict=NONMATCH, stage=STAGE_PROBABILISTIC,
                score=scored.overall_score,
            ))
        else:
            interior.append(pair)

    if interior:
        timeout = llm_cfg.timeout_ms / 1000.0
        with httpx.Client(timeout=timeout) as client:
            def ask(pair: RecordPair):
                try:
                    return match_llm(pair, llm_cfg, client=client)
                except (TransportError, UnparseableResponse):
                    return (pair.left.record_id, pair.right.record_id)

            if parallelism > 1:
                with ThreadPoolExecutor(max_workers=parallelism) as pool:
                    results = list(pool.map(ask, interior))
            else:
                results = [ask(p) for p in interior]
        for result in results:
            if isinstance(result, MatchDecision):
                decisions.append(result)
            else:
                queued.append(result)

    decisions.sort(key=lambda d: (d.left_id, d.right_id))
    queued.sort()
    return decisions, queued


def write_decisions_csv(decisions, path) -> None:
    """Export: left_id, right_id, verdict, stage, score, raw_response."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["left_id", "right_id", "verdict", "stage", "score", "raw_response"]
        )
        for d in decisions:
            writer.writerow([
                d.left_id, d.right_id, d.verdict, d.stage,
                "" if d.score is None else repr(d.score),
                d.raw_response or "",
            ])


def read_decisions_csv(path) -> list[MatchDecision]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            out.append(MatchDecision(
                left_id=row["left_id"], right_id=row["right_id"],
                verdict=row["verdict"], stage=row["stage"],
                score=float(row["score"]) if row["score"] else None,
                raw_response=row["raw_response"] or None,
            ))
        return out
