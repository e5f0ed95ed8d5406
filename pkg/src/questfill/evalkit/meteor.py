"""METEOR: unigram alignment with a fragmentation penalty.

Matching runs in two stages - exact surface forms first, then stems - and
is one-to-one. With m matched unigrams, P = m/|candidate|, R = m/|reference|,
F_mean = 10PR/(R+9P), penalty = 0.5*(chunks/m)^3 and the score is
F_mean*(1-penalty), where chunks counts contiguous runs aligned in both
strings. A synonym stage is intentionally absent (no language-neutral
synonym source), making this a slight under-estimate of full METEOR.
"""

from __future__ import annotations

import logging
import re

from .stemmer import stem_for

logger = logging.getLogger(__name__)

_PUNCT_RE = re.compile(r"[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return _PUNCT_RE.sub(" ", text.lower()).split()


def _match_stage(cand: list[str], ref: list[str], cand_free: list[bool],
                 ref_free: list[bool], pairs: dict[int, int]) -> None:
    """One-to-one matching of equal keys over the still-unmatched positions.

    Prefers the reference position that extends the previous token's run
    (keeps chunks minimal on typical inputs), otherwise the leftmost free
    occurrence.
    """
    positions: dict[str, list[int]] = {}
    for j, key in enumerate(ref):
        if ref_free[j]:
            positions.setdefault(key, []).append(j)
    for i, key in enumerate(cand):
        if not cand_free[i]:
            continue
        open_slots = [j for j in positions.get(key, ()) if ref_free[j]]
        if not open_slots:
            continue
        want = pairs.get(i - 1)
        if want is not None and (want + 1) in open_slots:
            j = want + 1
        else:
            j = open_slots[0]
        pairs[i] = j
        cand_free[i] = False
        ref_free[j] = False


def align(candidate_tokens: list[str], reference_tokens: list[str],
          language: str = "en") -> tuple[int, int]:
    """Return (matches, chunks) for the staged alignment."""
    stem = stem_for(language)
    cand_free = [True] * len(candidate_tokens)
    ref_free = [True] * len(reference_tokens)
    pairs: dict[int, int] = {}
    _match_stage(candidate_tokens, reference_tokens, cand_free, ref_free, pairs)
    _match_stage([stem(w) for w in candidate_tokens],
                 [stem(w) for w in reference_tokens], cand_free, ref_free, pairs)
    if not pairs:
        return 0, 0
    chunks = 0
    prev: tuple[int, int] | None = None
    for i in sorted(pairs):
        j = pairs[i]
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return len(pairs), chunks


def meteor(candidate: str, reference: str, language: str = "en") -> float:
    """METEOR score in [0, 1]; 0 when either side is empty or nothing matches."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        logger.warning("meteor: empty input (candidate=%d tokens, reference=%d tokens)",
                       len(cand), len(ref))
        return 0.0
    m, chunks = align(cand, ref, language)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1.0 - penalty)
