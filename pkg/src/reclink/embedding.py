"""Dense vector embeddings for serialized records.

Two providers: a deterministic character-n-gram hashing embedder (the
desk-scale stand-in for a fine-tuned sentence encoder, and deliberately
more robust to single-character typos than subword tokenizers are) and a
client for a remote embedding service speaking JSON over HTTP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import httpx
import numpy as np

from . import textsim
from .errors import ConfigError, TransportError

DEFAULT_DIM = 256
DEFAULT_NGRAM = 3


@dataclass(frozen=True)
class EmbeddingVector:
    """L2-normalized dense vector; zero vector (flagged) for empty input."""

    values: np.ndarray
    empty_input: bool = False

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def embed_ngram_hash(text: str, dim: int = DEFAULT_DIM,
                     n: int = DEFAULT_NGRAM) -> EmbeddingVector:
    """Hash character n-grams of '#'-padded text into a unit-norm vector.

    Hash algorithm: FNV-1a 64-bit over the n-gram's code points (four
    little-endian bytes each), bucket = hash mod dim. Fixed constants, no
    per-process seed, so vectors are identical across runs and platforms.
    """
    _validate_ngram_params(dim, n)
    counts = np.array(textsim.ngram_bucket_counts(text, n, dim), dtype=np.float64)
    norm = math.sqrt(float(np.dot(counts, counts)))
    if norm == 0.0:
        return EmbeddingVector(values=counts, empty_input=True)
    return EmbeddingVector(values=counts / norm)


def _validate_ngram_params(dim: int, n: int) -> None:
    if dim < 16:
        raise ConfigError(f"embedding dim must be >= 16, got {dim}")
    if n not in (2, 3, 4):
        raise ConfigError(f"n-gram size must be 2, 3 or 4, got {n}")


class NgramHashEmbedder:
    """Batch interface over embed_ngram_hash."""

    def __init__(self, dim: int = DEFAULT_DIM, n: int = DEFAULT_NGRAM):
        _validate_ngram_params(dim, n)
        self.dim = dim
        self.n = n

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        """Matrix of unit-norm rows (all-zero rows for empty inputs)."""
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            out[i] = embed_ngram_hash(text, self.dim, self.n).values
        return out


@dataclass(frozen=True)
class RemoteConfig:
    """Connection settings for a remote embedding service."""

    url: str
    batch_size: int = 32
    timeout_ms: int = 10_000

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.timeout_ms <= 0:
            raise ConfigError(f"timeout_ms must be positive, got {self.timeout_ms}")


class RemoteEmbedder:
    """Client for an embedding service: POST {"texts": [...]} per batch.

    The response must carry {"embeddings": [[...], ...]} with one vector per
    input text, all of equal dimension; vectors are re-normalized locally.
    Any transport or contract failure raises TransportError naming the batch
    index, and no partial results are returned.
    """

    def __init__(self, config: RemoteConfig):
        self.config = config

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        batches = [
            texts[i:i + self.config.batch_size]
            for i in range(0, len(texts), self.config.batch_size)
        ]
        rows: list[np.ndarray] = []
        dim: int | None = None
        timeout = self.config.timeout_ms / 1000.0
        with httpx.Client(timeout=timeout) as client:
            for batch_idx, batch in enumerate(batches):
                try:
                    resp = client.post(self.config.url, json={"texts": batch})
                except httpx.HTTPError as exc:
                    raise TransportError(
                        f"embedding batch {batch_idx}: {exc}"
                    ) from exc
                if resp.status_code != 200:
                    raise TransportError(
                        f"embedding batch {batch_idx}: HTTP {resp.status_code}"
                    )
                try:
                    embeddings = resp.json()["embeddings"]
                except (KeyError, ValueError) as exc:
                    raise TransportError(
                        f"embedding batch {batch_idx}: malformed response ({exc})"
                    ) from exc
                if len(embeddings) != len(batch):
                    raise TransportError(
                        f"embedding batch {batch_idx}: sent {len(batch)} texts, "
                        f"got {len(embeddings)} embeddings"
                    )
                for vec in embeddings:
                    if dim is None:
                        dim = len(vec)
                    elif len(vec) != dim:
                        raise TransportError(
                            f"embedding batch {batch_idx}: ragged dimensions "
                            f"({len(vec)} vs {dim})"
                        )
                    rows.append(np.asarray(vec, dtype=np.float64))

        out = np.vstack(rows) if rows else np.zeros((0, dim or 0))
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        np.divide(out, norms, out=out, where=norms > 0)
        return out


def cosine(u, v) -> float:
    """Cosine similarity of two embedding vectors.

    Inputs must share a dimension; a zero vector on either side is defined
    to have similarity 0.0.
    """
    a = u.values if isinstance(u, EmbeddingVector) else np.asarray(u, dtype=np.float64)
    b = v.values if isinstance(v, EmbeddingVector) else np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def make_provider(kind: str, *, dim: int = DEFAULT_DIM, n: int = DEFAULT_NGRAM,
                  remote: RemoteConfig | None = None):
    """Provider factory used by the CLI and the blocking module."""
    if kind == "ngram_hash":
        return NgramHashEmbedder(dim=dim, n=n)
    if kind == "remote":
        if remote is None:
            raise ConfigError("remote provider requires a RemoteConfig")
        return RemoteEmbedder(remote)
    raise ConfigError(f"unknown embedding provider {kind!r}")
