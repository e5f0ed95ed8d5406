"""Dense embeddings for chunks and queries.

Two backends behind one config:

* "remote" - any OpenAI-compatible /v1/embeddings endpoint, batched with
  retry/backoff, optionally fronted by a simple on-disk vector cache
  keyed by (model_tag, text hash).
* "hashed" - a deterministic trigram-hashing embedder for offline tests;
  similar strings share trigrams and therefore correlate, which is enough
  to make retrieval meaningful without a model server.

Embeddings are plain float64 numpy arrays, L2-normalized at this boundary
(cosine in the index reduces to a dot product); an all-zero embedding stays
all-zero. The model tag travels with the config, not each vector.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch
from .httpclient import InferenceClient

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64_MASK = (1 << 64) - 1


@dataclass
class EmbedderConfig:
    backend: str = "hashed"  # "remote" | "hashed"
    endpoint_url: str = ""
    model_name: str = ""
    dim: int = 256  # hashed backend only; remote dim comes from the endpoint
    batch_size: int = 32
    timeout_ms: int = 30_000
    max_retries: int = 3

    def __post_init__(self):
        if self.backend not in ("remote", "hashed"):
            raise ValueError(f"unknown embedder backend: {self.backend!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.backend == "hashed" and self.dim < 2:
            raise ValueError("hashed backend requires dim >= 2")
        if self.backend == "remote" and not self.endpoint_url:
            raise ValueError("remote backend requires endpoint_url")

    @property
    def model_tag(self) -> str:
        if self.backend == "hashed":
            return f"hashed-trigram-{self.dim}"
        return self.model_name


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _U64_MASK
    return h


def hashed_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic trigram-hash embedding.

    Every character trigram of the lowercased text is FNV-1a-64 hashed;
    the hash's top bit picks the sign and `h mod dim` the slot. The result
    is L2-normalized; texts shorter than 3 characters embed to zero.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    vec = np.zeros(dim, dtype=np.float64)
    low = text.lower()
    for i in range(len(low) - 2):
        h = _fnv1a64(low[i:i + 3].encode("utf-8"))
        vec[h % dim] += 1.0 if (h >> 63) == 0 else -1.0
    return l2_normalize(vec)


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    """Unit-normalize; the all-zero vector is returned unchanged."""
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return vec
    return vec / norm


class EmbeddingCache:
    """On-disk key -> vector store keyed by (model_tag, text hash).

    One .npy file per entry under cache_dir/<model_tag>/; deliberately
    dumb - no eviction, no locking beyond atomic-enough writes.
    """

    def __init__(self, cache_dir: str | Path):
        self.cache_dir = Path(cache_dir)

    def _path(self, model_tag: str, text: str) -> Path:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        safe_tag = model_tag.replace("/", "_") or "untagged"
        return self.cache_dir / safe_tag / f"{digest}.npy"

    def get(self, model_tag: str, text: str) -> np.ndarray | None:
        path = self._path(model_tag, text)
        if not path.exists():
            return None
        return np.load(path)

    def put(self, model_tag: str, text: str, vector: np.ndarray) -> None:
        path = self._path(model_tag, text)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npy")
        np.save(tmp, vector)
        tmp.replace(path)


def _embed_remote(texts: list[str], cfg: EmbedderConfig,
                  client: InferenceClient | None) -> np.ndarray:
    client = client or InferenceClient(cfg.endpoint_url, timeout_ms=cfg.timeout_ms,
                                       max_retries=cfg.max_retries)
    rows: list[np.ndarray] = []
    dim: int | None = None
    for start in range(0, len(texts), cfg.batch_size):
        batch = texts[start:start + cfg.batch_size]
        for raw in client.embeddings(cfg.model_name, batch):
            vec = np.asarray(raw, dtype=np.float64)
            if vec.ndim != 1 or vec.size == 0 or not np.all(np.isfinite(vec)):
                raise DimensionMismatch("endpoint returned a non-finite or empty vector")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise DimensionMismatch(
                    f"endpoint returned mixed dimensions ({vec.size} vs {dim})")
            rows.append(l2_normalize(vec))
    return np.vstack(rows)


def embed_batch(texts: list[str], cfg: EmbedderConfig,
                client: InferenceClient | None = None,
                cache: EmbeddingCache | None = None) -> np.ndarray:
    """Embed texts in order; returns an (n, dim) float64 array of unit rows.

    Texts that are empty after trimming embed to the all-zero vector. With
    a cache, remote lookups happen only for texts missing from it.
    """
    if not texts:
        raise ValueError("embed_batch requires at least one text")
    if cfg.backend == "hashed":
        return np.vstack([hashed_embed(t, cfg.dim) for t in texts])
    pending: list[tuple[int, str]] = []
    cached: dict[int, np.ndarray] = {}
    for i, text in enumerate(texts):
        if not text.strip():
            continue
        hit = cache.get(cfg.model_tag, text) if cache else None
        if hit is not None:
            cached[i] = hit
        else:
            pending.append((i, text))
    if not pending and not cached:
        # remote endpoints commonly reject empty input; dim is unknowable here
        raise ValueError("all texts are empty; cannot infer remote embedding dim")
    if pending:
        embedded = _embed_remote([t for _, t in pending], cfg, client)
        for row, (i, text) in zip(embedded, pending):
            cached[i] = row
            if cache:
                cache.put(cfg.model_tag, text, row)
    dim = next(iter(cached.values())).shape[0]
    out = np.zeros((len(texts), dim), dtype=np.float64)
    for i, row in cached.items():
        if row.shape[0] != dim:
            raise DimensionMismatch(
                f"cached vector dim {row.shape[0]} != batch dim {dim}")
        out[i] = row
    return out
