"""BERTScore-style greedy token matching over pluggable token embeddings.

Precision is the (optionally idf-weighted) mean over candidate tokens of
the best cosine against any reference token; recall mirrors it from the
reference side; F1 is their harmonic mean. Token embeddings come from any
callable - a remote contextual model or the hashed trigram embedder for
offline runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .. import kernels
from ..embedder import hashed_embed, l2_normalize
from ..errors import DimensionMismatch, EmptyInput
from .meteor import tokenize


@dataclass
class BertScoreResult:
    precision: float
    recall: float
    f1: float


def _stack_unit_rows(vectors: Sequence[np.ndarray]) -> np.ndarray:
    rows = [l2_normalize(np.asarray(v, dtype=np.float64)) for v in vectors]
    return np.vstack(rows)


def _weighted_mean(values: np.ndarray, weights: np.ndarray | None) -> float:
    if weights is None:
        return float(values.mean())
    weights = np.asarray(weights, dtype=np.float64)
    total = float(weights.sum())
    if total <= 0:
        return float(values.mean())
    return float((values * weights).sum() / total)


def bertscore(candidate_vectors: Sequence[np.ndarray],
              reference_vectors: Sequence[np.ndarray],
              candidate_weights: np.ndarray | None = None,
              reference_weights: np.ndarray | None = None) -> BertScoreResult:
    """Greedy-match precision/recall/F1 over token embedding lists."""
    if len(candidate_vectors) == 0 or len(reference_vectors) == 0:
        raise EmptyInput("bertscore requires non-empty token embedding lists")
    cand = _stack_unit_rows(candidate_vectors)
    ref = _stack_unit_rows(reference_vectors)
    if cand.shape[1] != ref.shape[1]:
        raise DimensionMismatch(
            f"candidate dim {cand.shape[1]} != reference dim {ref.shape[1]}")
    row_max, col_max = kernels.pairwise_max(cand, ref)
    # unit-vector cosines live in [-1, 1]; clip float noise so self-matches
    # score exactly 1 and the documented score bounds hold
    row_max = np.clip(row_max, -1.0, 1.0)
    col_max = np.clip(col_max, -1.0, 1.0)
    precision = _weighted_mean(row_max, candidate_weights)
    recall = _weighted_mean(col_max, reference_weights)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return BertScoreResult(precision=precision, recall=recall, f1=f1)


TokenEmbedder = Callable[[list[str]], list[np.ndarray]]


def hashed_token_embedder(dim: int = 256) -> TokenEmbedder:
    """Per-token hashed trigram embedder (the offline default)."""
    def embed(tokens: list[str]) -> list[np.ndarray]:
        return [hashed_embed(tok, dim) for tok in tokens]
    return embed


def embed_tokens(text: str, token_embedder: TokenEmbedder) -> list[np.ndarray]:
    """Tokenize and embed; empty-after-tokenization raises EmptyInput."""
    tokens = tokenize(text)
    if not tokens:
        raise EmptyInput("text tokenized to nothing")
    return token_embedder(tokens)


def bertscore_texts(candidate: str, reference: str,
                    token_embedder: TokenEmbedder) -> BertScoreResult:
    """Convenience wrapper scoring raw strings."""
    return bertscore(embed_tokens(candidate, token_embedder),
                     embed_tokens(reference, token_embedder))
