"""Independent reference implementations used as test oracles.

Everything here is written directly from the operation definitions - plain
loops, no shared code with the package internals - so tests compare two
independently derived answers.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def windows_oracle(text: str, size: int, overlap: int) -> list[str]:
    """Flat splitting: fixed windows advancing by (size - overlap), stopping
    once a window reaches the end of the text."""
    if not text:
        return []
    stride = size - overlap
    out = []
    start = 0
    while True:
        out.append(text[start:start + size])
        if start + size >= len(text):
            return out
        start += stride


def scan_oracle(vectors: np.ndarray, ids: list[str], query: np.ndarray,
                k: int) -> list[tuple[str, float]]:
    """Exact top-k by cosine (dot of unit vectors), ties by ascending id."""
    scored = []
    for i in range(vectors.shape[0]):
        scored.append((float(np.dot(vectors[i].astype(np.float64),
                                    query.astype(np.float64))), ids[i]))
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [(cid, score) for score, cid in scored[:k]]


def mmr_oracle(cand: np.ndarray, qsims: np.ndarray, lam: float,
               k: int) -> tuple[list[int], list[float]]:
    """Brute-force greedy MMR: first pick maximizes query similarity alone,
    later picks maximize lam*sim(d,q) - (1-lam)*max_sim(d, selected).
    Candidates are assumed pre-sorted so that lower index = tie winner."""
    n = cand.shape[0]
    selected: list[int] = []
    scores: list[float] = []
    remaining = list(range(n))
    for step in range(min(k, n)):
        best_i = None
        best_val = None
        for i in remaining:
            if step == 0:
                val = float(qsims[i])
            else:
                max_sim = max(float(np.dot(cand[i], cand[j])) for j in selected)
                val = lam * float(qsims[i]) - (1 - lam) * max_sim
            if best_val is None or val > best_val:
                best_val = val
                best_i = i
        max_sim = (max(float(np.dot(cand[best_i], cand[j])) for j in selected)
                   if selected else 0.0)
        scores.append(lam * float(qsims[best_i]) - (1 - lam) * max_sim)
        selected.append(best_i)
        remaining.remove(best_i)
    return selected, scores


def greedy_match_oracle(cand: np.ndarray, ref: np.ndarray) -> tuple[float, float, float]:
    """Per-token max cosine, averaged, plus harmonic mean."""
    def unit(v):
        norm = np.linalg.norm(v)
        return v / norm if norm else v

    c = np.array([unit(row) for row in cand])
    r = np.array([unit(row) for row in ref])
    p_vals = [max(float(np.dot(ci, rj)) for rj in r) for ci in c]
    r_vals = [max(float(np.dot(ci, rj)) for ci in c) for rj in r]
    precision = sum(p_vals) / len(p_vals)
    recall = sum(r_vals) / len(r_vals)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def meteor_scalar(m: int, cand_len: int, ref_len: int, chunks: int) -> float:
    """Score from counted quantities, in exact rational arithmetic."""
    if m == 0:
        return 0.0
    precision = Fraction(m, cand_len)
    recall = Fraction(m, ref_len)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    penalty = Fraction(1, 2) * Fraction(chunks, m) ** 3
    return float(f_mean * (1 - penalty))


def fnv1a64_oracle(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & ((1 << 64) - 1)
    return h


def hashed_embed_oracle(text: str, dim: int) -> list[float]:
    """Trigram-hash embedding recomputed from the stated scheme."""
    vec = [0.0] * dim
    low = text.lower()
    for i in range(len(low) - 2):
        h = fnv1a64_oracle(low[i:i + 3].encode("utf-8"))
        vec[h % dim] += 1.0 if (h >> 63) == 0 else -1.0
    norm = sum(v * v for v in vec) ** 0.5
    if norm == 0:
        return vec
    return [v / norm for v in vec]
