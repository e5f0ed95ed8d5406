"""Document splitting: flat character windows and separator-hierarchy recursion.

Chunks are contiguous spans of the parent's normalized text, so provenance
offsets (char_start, char_end) always index into the source document.
Separator characters at chunk boundaries are dropped (visible as offset
gaps); separators interior to a merged chunk remain part of its text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import SourceDocument

DEFAULT_SEPARATORS = ("\n\n", "\n", " ", "")


@dataclass
class SplitConfig:
    chunk_size: int = 512
    overlap: int = 0
    strategy: str = "recursive"  # "flat" | "recursive"
    separators: tuple[str, ...] = DEFAULT_SEPARATORS

    def __post_init__(self):
        if not 1 <= self.chunk_size <= 100_000:
            raise ValueError(f"chunk_size out of range: {self.chunk_size}")
        if not 0 <= self.overlap < self.chunk_size:
            raise ValueError(f"overlap must satisfy 0 <= overlap < chunk_size, got {self.overlap}")
        if self.strategy not in ("flat", "recursive"):
            raise ValueError(f"unknown strategy: {self.strategy!r}")
        self.separators = tuple(self.separators)
        if not self.separators or self.separators[-1] != "":
            raise ValueError('separators must end with ""')


@dataclass
class Chunk:
    chunk_id: str
    doc_id: str
    text: str
    char_start: int
    char_end: int
    seq: int
    metadata: dict[str, str] = field(default_factory=dict)


def _make_chunks(doc: SourceDocument, spans: list[tuple[int, int]]) -> list[Chunk]:
    return [
        Chunk(
            chunk_id=f"{doc.doc_id}-{seq:04d}",
            doc_id=doc.doc_id,
            text=doc.text[s:e],
            char_start=s,
            char_end=e,
            seq=seq,
        )
        for seq, (s, e) in enumerate(spans)
    ]


def split_flat(doc: SourceDocument, cfg: SplitConfig) -> list[Chunk]:
    """Sliding window of chunk_size characters advancing by chunk_size - overlap.

    Windows stop once one reaches the end of the text, so the final chunk
    may be shorter but is never an overlap-only remnant.
    """
    text = doc.text
    if not text:
        return []
    stride = cfg.chunk_size - cfg.overlap
    spans: list[tuple[int, int]] = []
    start = 0
    while True:
        end = min(start + cfg.chunk_size, len(text))
        spans.append((start, end))
        if start + cfg.chunk_size >= len(text):
            break
        start += stride
    return _make_chunks(doc, spans)


def _piece_spans(text: str, offset: int, chunk_size: int,
                 separators: tuple[str, ...]) -> list[tuple[int, int]]:
    """Split into leaf piece spans, each at most chunk_size characters.

    Splits on the first separator present; oversized pieces recurse on the
    remaining separators. "" splits into single characters.
    """
    if len(text) <= chunk_size:
        return [(offset, offset + len(text))] if text else []
    for i, sep in enumerate(separators):
        if sep == "":
            return [(offset + j, offset + j + 1) for j in range(len(text))]
        if sep not in text:
            continue
        spans: list[tuple[int, int]] = []
        pos = 0
        while pos <= len(text):
            nxt = text.find(sep, pos)
            end = len(text) if nxt == -1 else nxt
            piece = text[pos:end]
            if piece:
                if len(piece) <= chunk_size:
                    spans.append((offset + pos, offset + end))
                else:
                    spans.extend(_piece_spans(piece, offset + pos, chunk_size,
                                              separators[i + 1:]))
            if nxt == -1:
                break
            pos = end + len(sep)
        return spans
    return [(offset, offset + len(text))]  # unreachable with a "" sentinel


def _merge_spans(pieces: list[tuple[int, int]], chunk_size: int,
                 overlap: int) -> list[tuple[int, int]]:
    """Greedily merge adjacent pieces while the covering span fits chunk_size.

    Overlap keeps whole trailing pieces of the previous chunk (at most
    `overlap` characters of them) as the start of the next chunk.
    """
    chunks: list[tuple[int, int]] = []
    current: list[tuple[int, int]] = []
    for piece in pieces:
        if current and piece[1] - current[0][0] > chunk_size:
            chunks.append((current[0][0], current[-1][1]))
            last_end = current[-1][1]
            while current and (last_end - current[0][0] > overlap
                               or piece[1] - current[0][0] > chunk_size):
                current.pop(0)
        current.append(piece)
    if current:
        chunks.append((current[0][0], current[-1][1]))
    return chunks


def split_recursive(doc: SourceDocument, cfg: SplitConfig) -> list[Chunk]:
    """Separator-hierarchy splitting with greedy merge and piece-aligned overlap."""
    if not doc.text:
        return []
    pieces = _piece_spans(doc.text, 0, cfg.chunk_size, cfg.separators)
    spans = _merge_spans(pieces, cfg.chunk_size, cfg.overlap)
    return _make_chunks(doc, spans)


def split_document(doc: SourceDocument, cfg: SplitConfig) -> list[Chunk]:
    if cfg.strategy == "flat":
        return split_flat(doc, cfg)
    return split_recursive(doc, cfg)


def split_corpus(docs: list[SourceDocument], cfg: SplitConfig) -> list[Chunk]:
    chunks: list[Chunk] = []
    for doc in docs:
        chunks.extend(split_document(doc, cfg))
    return chunks


def write_chunks(path: str | Path, chunks: list[Chunk]) -> None:
    """Serialize chunks as JSONL, one object per line."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for c in chunks:
            fh.write(json.dumps({
                "chunk_id": c.chunk_id, "doc_id": c.doc_id, "seq": c.seq,
                "char_start": c.char_start, "char_end": c.char_end, "text": c.text,
            }, ensure_ascii=False) + "\n")


def read_chunks(path: str | Path) -> list[Chunk]:
    chunks = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            chunks.append(Chunk(
                chunk_id=rec["chunk_id"], doc_id=rec["doc_id"], text=rec["text"],
                char_start=rec["char_start"], char_end=rec["char_end"], seq=rec["seq"],
            ))
    return chunks
