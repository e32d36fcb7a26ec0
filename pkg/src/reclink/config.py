"""Run configuration: one YAML file, flag overrides, resolved echo.

Unknown keys are rejected so typos fail loudly; every run writes the fully
resolved configuration next to its outputs, and re-running from that echo
reproduces the run.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .datagen import CorpusSpec, PerturbationProfile
from .embedding import DEFAULT_DIM, DEFAULT_NGRAM, RemoteConfig
from .errors import ConfigError
from .fellegi_sunter import (
    ClassificationThresholds,
    FieldComparator,
    default_comparators,
)
from .matching import DEFAULT_SYSTEM_PROMPT, CascadePolicy, LlmEndpointConfig
from .records import FIELDS

BLOCKING_MODES = ("rules", "knn", "hybrid")
DEFAULT_RULES = ("soundex_first_last", "exact_birth_date", "exact_ssn")


@dataclass(frozen=True)
class BlockingConfig:
    mode: str = "hybrid"
    rules: tuple[str, ...] = DEFAULT_RULES
    k: int = 10
    tau: float = 0.75
    band: ClassificationThresholds = field(
        default_factory=lambda: ClassificationThresholds(0.65, 1.0)
    )

    def __post_init__(self):
        if self.mode not in BLOCKING_MODES:
            raise ConfigError(f"unknown blocking mode {self.mode!r}")


@dataclass(frozen=True)
class EmbeddingConfig:
    provider: str = "ngram_hash"
    dim: int = DEFAULT_DIM
    n: int = DEFAULT_NGRAM
    remote: RemoteConfig | None = None

    def __post_init__(self):
        if self.provider not in ("ngram_hash", "remote"):
            raise ConfigError(f"unknown embedding provider {self.provider!r}")
        if self.provider == "remote" and self.remote is None:
            raise ConfigError("embedding provider 'remote' needs remote settings")


@dataclass(frozen=True)
class ReviewConfig:
    host: str = "127.0.0.1"
    port: int = 8234
    log_path: str = "review_decisions.jsonl"
    lease_seconds: float = 600.0


@dataclass(frozen=True)
class RunConfig:
    seed: int = 20_240_601
    parallelism: int = 0  # 0 means number of processors
    generate: CorpusSpec = field(default_factory=CorpusSpec)
    comparators: tuple[FieldComparator, ...] = field(
        default_factory=default_comparators
    )
    blocking: BlockingConfig = field(default_factory=BlockingConfig)
    cascade: CascadePolicy = field(
        default_factory=lambda: CascadePolicy(
            band=ClassificationThresholds(0.65, 1.0),
            escalation_target="human_queue",
        )
    )
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    llm: LlmEndpointConfig | None = None
    review: ReviewConfig = field(default_factory=ReviewConfig)

    def effective_parallelism(self) -> int:
        return self.parallelism if self.parallelism > 0 else (os.cpu_count() or 1)


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _parse_generate(section: dict) -> CorpusSpec:
    allowed = {"n_persons", "p_in_a", "p_in_b", "missing_ssn_b",
               "missing_addr_b", "birth_year_min", "birth_year_max",
               "middle_name_rate", "name_pool_limit", "seed", "perturb"}
    _require_keys(section, allowed, "generate")
    perturb_section = section.pop("perturb", {})
    _require_keys(perturb_section,
                  {"typo_rate", "nickname_swap_rate", "middle_initial_rate",
                   "dob_day_jitter_rate", "address_typo_rate"},
                  "generate.perturb")
    return CorpusSpec(perturb=PerturbationProfile(**perturb_section), **section)


def _parse_comparators(section: dict) -> tuple[FieldComparator, ...]:
    comparators = []
    for name, opts in section.items():
        if name not in FIELDS:
            raise ConfigError(f"unknown field in comparators: {name!r}")
        _require_keys(opts, {"kind", "m", "u", "threshold", "max_edits"},
                      f"comparators.{name}")
        comparators.append(FieldComparator(field=name, **opts))
    if not comparators:
        raise ConfigError("comparators section is empty")
    return tuple(comparators)


def _parse_band(value, where: str) -> ClassificationThresholds:
    if (not isinstance(value, (list, tuple))) or len(value) != 2:
        raise ConfigError(f"{where} must be [lower, upper]")
    return ClassificationThresholds(float(value[0]), float(value[1]))


def _parse_blocking(section: dict) -> BlockingConfig:
    _require_keys(section, {"mode", "rules", "k", "tau", "band"}, "blocking")
    kwargs = dict(section)
    if "rules" in kwargs:
        kwargs["rules"] = tuple(kwargs["rules"])
    if "band" in kwargs:
        kwargs["band"] = _parse_band(kwargs["band"], "blocking.band")
    return BlockingConfig(**kwargs)


def _parse_cascade(section: dict) -> CascadePolicy:
    _require_keys(section, {"band", "escalation_target"}, "cascade")
    band = _parse_band(section.get("band", [0.65, 1.0]), "cascade.band")
    return CascadePolicy(
        band=band,
        escalation_target=section.get("escalation_target", "human_queue"),
    )


def _parse_embedding(section: dict) -> EmbeddingConfig:
    _require_keys(section, {"provider", "dim", "n", "remote"}, "embedding")
    kwargs = dict(section)
    remote = kwargs.pop("remote", None)
    if remote is not None:
        _require_keys(remote, {"url", "batch_size", "timeout_ms"},
                      "embedding.remote")
        remote = RemoteConfig(**remote)
    return EmbeddingConfig(remote=remote, **kwargs)


def _parse_llm(section: dict) -> LlmEndpointConfig:
    _require_keys(section, {"url", "model", "temperature", "system_prompt",
                            "max_retries", "timeout_ms", "max_tokens"}, "llm")
    kwargs = dict(section)
    # Distinguish "key absent" (default prompt) from explicit null (omit).
    if "system_prompt" not in kwargs:
        kwargs["system_prompt"] = DEFAULT_SYSTEM_PROMPT
    return LlmEndpointConfig(**kwargs)


def _parse_review(section: dict) -> ReviewConfig:
    _require_keys(section, {"host", "port", "log_path", "lease_seconds"},
                  "review")
    return ReviewConfig(**section)


def load_config(path: str | Path | None = None,
                data: dict | None = None) -> RunConfig:
    """Build a RunConfig from a YAML file and/or an override mapping.

    ``data`` (e.g. from CLI flags) is deep-merged over the file contents.
    """
    merged: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        loaded = yaml.safe_load(text) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config root must be a mapping: {path}")
        merged = loaded
    if data:
        merged = _deep_merge(merged, data)

    allowed = {"seed", "parallelism", "generate", "comparators", "blocking",
               "cascade", "embedding", "llm", "review"}
    _require_keys(merged, allowed, "config root")

    try:
        kwargs: dict = {}
        if "seed" in merged:
            kwargs["seed"] = int(merged["seed"])
        if "parallelism" in merged:
            kwargs["parallelism"] = int(merged["parallelism"])
        if "generate" in merged:
            gen = dict(merged["generate"])
            gen.setdefault("seed", kwargs.get("seed", RunConfig.seed))
            kwargs["generate"] = _parse_generate(gen)
        elif "seed" in kwargs:
            kwargs["generate"] = CorpusSpec(seed=kwargs["seed"])
        if "comparators" in merged:
            kwargs["comparators"] = _parse_comparators(merged["comparators"])
        if "blocking" in merged:
            kwargs["blocking"] = _parse_blocking(merged["blocking"])
        if "cascade" in merged:
            kwargs["cascade"] = _parse_cascade(merged["cascade"])
        if "embedding" in merged:
            kwargs["embedding"] = _parse_embedding(merged["embedding"])
        if merged.get("llm") is not None:
            kwargs["llm"] = _parse_llm(merged["llm"])
        if "review" in merged:
            kwargs["review"] = _parse_review(merged["review"])
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def resolved_dict(cfg: RunConfig) -> dict:
    """The fully resolved configuration as a YAML-ready mapping."""
    gen = cfg.generate
    out: dict = {
        "seed": cfg.seed,
        "parallelism": cfg.parallelism,
        "generate": {
            "n_persons": gen.n_persons,
            "p_in_a": gen.p_in_a,
            "p_in_b": gen.p_in_b,
            "missing_ssn_b": gen.missing_ssn_b,
            "missing_addr_b": gen.missing_addr_b,
            "birth_year_min": gen.birth_year_min,
            "birth_year_max": gen.birth_year_max,
            "middle_name_rate": gen.middle_name_rate,
            "name_pool_limit": gen.name_pool_limit,
            "seed": gen.seed,
            "perturb": {
                "typo_rate": gen.perturb.typo_rate,
                "nickname_swap_rate": gen.perturb.nickname_swap_rate,
                "middle_initial_rate": gen.perturb.middle_initial_rate,
                "dob_day_jitter_rate": gen.perturb.dob_day_jitter_rate,
                "address_typo_rate": gen.perturb.address_typo_rate,
            },
        },
        "comparators": {
            c.field: {
                "kind": c.kind, "m": c.m, "u": c.u,
                **({"threshold": c.threshold} if c.kind == "jaro_winkler" else {}),
                **({"max_edits": c.max_edits} if c.kind == "edit_distance" else {}),
            }
            for c in cfg.comparators
        },
        "blocking": {
            "mode": cfg.blocking.mode,
            "rules": list(cfg.blocking.rules),
            "k": cfg.blocking.k,
            "tau": cfg.blocking.tau,
            "band": [cfg.blocking.band.lower, cfg.blocking.band.upper],
        },
        "cascade": {
            "band": [cfg.cascade.band.lower, cfg.cascade.band.upper],
            "escalation_target": cfg.cascade.escalation_target,
        },
        "embedding": {
            "provider": cfg.embedding.provider,
            "dim": cfg.embedding.dim,
            "n": cfg.embedding.n,
            "remote": None if cfg.embedding.remote is None else {
                "url": cfg.embedding.remote.url,
                "batch_size": cfg.embedding.remote.batch_size,
                "timeout_ms": cfg.embedding.remote.timeout_ms,
            },
        },
        "llm": None if cfg.llm is None else {
            "url": cfg.llm.url,
            "model": cfg.llm.model,
            "temperature": cfg.llm.temperature,
            "system_prompt": cfg.llm.system_prompt,
            "max_retries": cfg.llm.max_retries,
            "timeout_ms": cfg.llm.timeout_ms,
            "max_tokens": cfg.llm.max_tokens,
        },
        "review": {
            "host": cfg.review.host,
            "port": cfg.review.port,
            "log_path": cfg.review.log_path,
            "lease_seconds": cfg.review.lease_seconds,
        },
    }
    if out["embedding"]["remote"] is None:
        del out["embedding"]["remote"]
    if out["llm"] is None:
        del out["llm"]
    return out


def write_echo(cfg: RunConfig, out_dir: str | Path) -> Path:
    """Write the resolved-config echo beside a run's outputs."""
    path = Path(out_dir) / "config_echo.yaml"
    path.write_text(
        yaml.safe_dump(resolved_dict(cfg), sort_keys=True), encoding="utf-8"
    )
    return path
