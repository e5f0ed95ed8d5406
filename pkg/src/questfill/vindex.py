"""In-process vector index: exact top-k cosine search and MMR re-ranking.

Storage is a flat float32 matrix (struct-of-arrays); scans run in float64
through the kernels module. Exact by construction - no approximation - so
brute-force oracles can assert equality. Ties always break by ascending
chunk_id for reproducibility.

Persistence format ("QFIX1"): magic bytes, one JSON header line
{dim, model_tag, count}, count*dim little-endian float32 values, one JSONL
record {chunk_id, text} per entry, and a trailing little-endian CRC-32 of
all preceding bytes.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels
from .errors import CorruptIndex, DimensionMismatch, DuplicateChunkId, EmptyIndex
from .splitter import Chunk

MAGIC = b"QFIX1"


@dataclass
class RetrievalConfig:
    technique: str = "similarity"  # "similarity" | "mmr"
    k: int = 20
    fetch_k: int | None = None  # MMR candidate pool; defaults to 4*k
    mmr_lambda: float = 0.5

    def __post_init__(self):
        if self.technique not in ("similarity", "mmr"):
            raise ValueError(f"unknown retrieval technique: {self.technique!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.fetch_k is None:
            self.fetch_k = 4 * self.k
        if self.fetch_k < self.k:
            raise ValueError("fetch_k must be >= k")
        if not 0.0 <= self.mmr_lambda <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")


class Hit(NamedTuple):
    chunk_id: str
    score: float
    text: str


@dataclass
class RetrievalResult:
    hits: list[Hit]
    query_echo: str
    technique_used: str

    def chunk_ids(self) -> list[str]:
        return [h.chunk_id for h in self.hits]


@dataclass
class VectorIndex:
    dim: int
    model_tag: str
    _vectors: np.ndarray = field(init=False, repr=False)
    _chunk_ids: list[str] = field(init=False, repr=False)
    _texts: list[str] = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        self._vectors = np.empty((0, self.dim), dtype=np.float32)
        self._chunk_ids = []
        self._texts = []
        self._id_set: set[str] = set()
        self._f64_cache: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._chunk_ids)

    @property
    def matrix(self) -> np.ndarray:
        """Entry vectors as float64 (cached; invalidated by add)."""
        if self._f64_cache is None:
            self._f64_cache = self._vectors.astype(np.float64)
        return self._f64_cache

    def add(self, items: Iterable[tuple[Chunk, np.ndarray]]) -> int:
        """Append (chunk, vector) pairs; returns how many were added."""
        rows, ids, texts = [], [], []
        for chunk, vec in items:
            vec = np.asarray(vec)
            if vec.shape != (self.dim,):
                raise DimensionMismatch(
                    f"vector for {chunk.chunk_id} has shape {vec.shape}, index dim {self.dim}")
            if chunk.chunk_id in self._id_set or chunk.chunk_id in ids:
                raise DuplicateChunkId(chunk.chunk_id)
            rows.append(vec.astype(np.float32))
            ids.append(chunk.chunk_id)
            texts.append(chunk.text)
        if not rows:
            return 0
        self._vectors = np.vstack([self._vectors, np.stack(rows)])
        self._chunk_ids.extend(ids)
        self._texts.extend(texts)
        self._id_set.update(ids)
        self._f64_cache = None
        return len(rows)

    def _check_query(self, query_vec: np.ndarray) -> np.ndarray:
        if len(self) == 0:
            raise EmptyIndex("search on an empty index")
        query_vec = np.asarray(query_vec, dtype=np.float64)
        if query_vec.shape != (self.dim,):
            raise DimensionMismatch(
                f"query has shape {query_vec.shape}, index dim {self.dim}")
        return query_vec

    def _ranked(self, query_vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All entries ordered by (-score, chunk_id); returns (order, scores)."""
        scores = np.clip(kernels.dot_scores(self.matrix, query_vec), -1.0, 1.0)
        ids = np.asarray(self._chunk_ids)
        order = np.lexsort((ids, -scores))
        return order, scores

    def search_similarity(self, query_vec: np.ndarray, cfg: RetrievalConfig,
                          query_echo: str = "") -> RetrievalResult:
        """Exact top-k cosine scan (vectors are pre-normalized upstream)."""
        query_vec = self._check_query(query_vec)
        order, scores = self._ranked(query_vec)
        top = order[:min(cfg.k, len(self))]
        hits = [Hit(self._chunk_ids[i], float(scores[i]), self._texts[i]) for i in top]
        return RetrievalResult(hits=hits, query_echo=query_echo,
                               technique_used="similarity")

    def search_mmr(self, query_vec: np.ndarray, cfg: RetrievalConfig,
                   query_echo: str = "") -> RetrievalResult:
        """Greedy MMR over the fetch_k most similar candidates."""
        query_vec = self._check_query(query_vec)
        order, scores = self._ranked(query_vec)
        pool = order[:min(cfg.fetch_k, len(self))]
        # reorder the pool by ascending chunk_id so first-max-wins ties
        # inside the kernel resolve to the lowest chunk_id
        pool = pool[np.argsort(np.asarray(self._chunk_ids)[pool], kind="stable")]
        cand = self.matrix[pool]
        qsims = scores[pool]
        sel, sel_scores = kernels.mmr_select(cand, qsims, cfg.mmr_lambda,
                                             min(cfg.k, len(pool)))
        hits = [Hit(self._chunk_ids[pool[i]], float(s), self._texts[pool[i]])
                for i, s in zip(sel, sel_scores)]
        return RetrievalResult(hits=hits, query_echo=query_echo, technique_used="mmr")

    def search(self, query_vec: np.ndarray, cfg: RetrievalConfig,
               query_echo: str = "") -> RetrievalResult:
        if cfg.technique == "mmr":
            return self.search_mmr(query_vec, cfg, query_echo)
        return self.search_similarity(query_vec, cfg, query_echo)

    # --- persistence ---

    def persist(self, path: str | Path) -> None:
        header = json.dumps(
            {"dim": self.dim, "model_tag": self.model_tag, "count": len(self)},
            sort_keys=True).encode("utf-8")
        buf = bytearray()
        buf += MAGIC
        buf += header + b"\n"
        buf += np.ascontiguousarray(self._vectors, dtype="<f4").tobytes()
        for chunk_id, text in zip(self._chunk_ids, self._texts):
            buf += json.dumps({"chunk_id": chunk_id, "text": text},
                              ensure_ascii=False, sort_keys=True).encode("utf-8") + b"\n"
        crc = zlib.crc32(bytes(buf)) & 0xFFFFFFFF
        buf += crc.to_bytes(4, "little")
        Path(path).write_bytes(bytes(buf))

    @classmethod
    def load(cls, path: str | Path, expect_model_tag: str | None = None) -> "VectorIndex":
        data = Path(path).read_bytes()
        if len(data) < len(MAGIC) + 4 or not data.startswith(MAGIC):
            raise CorruptIndex(f"{path}: bad magic or truncated file")
        body, crc_bytes = data[:-4], data[-4:]
        if zlib.crc32(body) & 0xFFFFFFFF != int.from_bytes(crc_bytes, "little"):
            raise CorruptIndex(f"{path}: CRC mismatch")
        nl = body.index(b"\n", len(MAGIC))
        try:
            header = json.loads(body[len(MAGIC):nl])
            dim, model_tag, count = header["dim"], header["model_tag"], header["count"]
        except (ValueError, KeyError) as exc:
            raise CorruptIndex(f"{path}: malformed header") from exc
        if expect_model_tag is not None and model_tag != expect_model_tag:
            raise DimensionMismatch(
                f"{path} was built with model_tag {model_tag!r}, expected {expect_model_tag!r}")
        vec_bytes = count * dim * 4
        vec_end = nl + 1 + vec_bytes
        if vec_end > len(body):
            raise CorruptIndex(f"{path}: vector block truncated")
        vectors = np.frombuffer(body[nl + 1:vec_end], dtype="<f4").reshape(count, dim)
        records = body[vec_end:].decode("utf-8").splitlines()
        if len(records) != count:
            raise CorruptIndex(f"{path}: expected {count} chunk records, found {len(records)}")
        index = cls(dim=dim, model_tag=model_tag)
        ids, texts = [], []
        for line in records:
            try:
                rec = json.loads(line)
                ids.append(rec["chunk_id"])
                texts.append(rec["text"])
            except (ValueError, KeyError) as exc:
                raise CorruptIndex(f"{path}: malformed chunk record") from exc
        if len(set(ids)) != len(ids):
            raise CorruptIndex(f"{path}: duplicate chunk ids")
        index._vectors = np.array(vectors, dtype=np.float32)
        index._chunk_ids = ids
        index._texts = texts
        index._id_set = set(ids)
        index._f64_cache = None
        return index
