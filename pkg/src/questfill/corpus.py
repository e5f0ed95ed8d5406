"""Corpus ingestion: load source files, normalize text, detect language.

Pipeline position: raw files -> INGEST/NORMALIZE -> split -> embed -> index.

Supported inputs are plain text (.txt, including text sidecars exported from
PDFs), Markdown (.md) and RFC 4180 CSV (.csv, including CSV exports of
spreadsheets). Tabular files are either concatenated into one document per
file (spreadsheet_mode="standard") or exploded into one document per data
row (spreadsheet_mode="separate").
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import DecodeError, UnsupportedFormat

logger = logging.getLogger(__name__)

SUPPORTED_EXTENSIONS = (".txt", ".md", ".csv")

# Fixed stopword lists backing the deterministic language heuristic.
# Kept intentionally small; overlapping forms (e.g. "in") may score for both.
GERMAN_STOPWORDS = frozenset("""
der die das den dem des ein eine einer eines einem einen
und oder aber doch denn wenn dann als also
auch auf aus bei bis durch für gegen hinter im in ins mit nach neben ohne
seit über um unter vom von vor zu zum zur zwischen
nicht kein keine keinen keinem keiner noch nur schon sehr
ist sind war waren sein seine seiner bin bist seid
wird werden wurde wurden worden
hat haben hatte hatten habe hast
kann können könnte muss müssen musste soll sollen sollte sollten
darf dürfen mag mögen will wollen wollte
ich du er sie es wir ihr ihnen ihm ihn uns euch mich dich sich
man dies diese dieser dieses diesen jeder jede jedes alle allen aller
wie wo wann warum wer was dass weil damit sowie bzw beim ob
""".split())

ENGLISH_STOPWORDS = frozenset("""
the a an and or but if then else nor not only
of to in on at by for with about against between into through during
before after above below from up down out off over under again further
here there when where why how what which who whom whose
all any both each few more most other some such no own same so than too very
is are was were be been being am
have has had having do does did doing done
would could should must shall may might can will cannot
it its this that these those they them their theirs
i you he she we me him her his hers your yours our ours my mine us
as just now once per via
""".split())

_CONTROL_RE = re.compile(r"[\x00-\x08\x0b-\x1f\x7f]")
_SPACE_RUN_RE = re.compile(r" {2,}")
_NEWLINE_SPACE_RE = re.compile(r" *\n *")
_NEWLINE_RUN_RE = re.compile(r"\n{3,}")
_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


@dataclass
class IngestOptions:
    """Knobs for a single ingestion pass."""

    spreadsheet_mode: str = "standard"  # "standard" | "separate"
    language_hint: str | None = None
    pdf_text_only: bool = True  # always true in v1; kept for forward compat

    def __post_init__(self):
        if self.spreadsheet_mode not in ("standard", "separate"):
            raise ValueError(f"unknown spreadsheet_mode: {self.spreadsheet_mode!r}")


@dataclass
class SourceDocument:
    """One normalized input document with provenance."""

    doc_id: str
    source_path: str
    text: str
    language: str  # BCP-47 tag or "und"
    kind: str  # "prose" | "tabular"
    metadata: dict[str, str] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "source_path": self.source_path,
            "language": self.language,
            "kind": self.kind,
            "n_chars": len(self.text),
            "metadata": self.metadata,
        }


def normalize_text(raw: str) -> str:
    """Normalize raw text to the corpus form. Total and idempotent.

    Rules, in order: CRLF/CR -> LF; tabs -> single space; remaining control
    characters dropped; runs of spaces collapsed to one; spaces flanking
    line breaks stripped; runs of 3+ newlines collapsed to 2; outer
    whitespace trimmed; Unicode NFC.
    """
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    text = text.replace("\t", " ")
    text = _CONTROL_RE.sub("", text)
    text = _SPACE_RUN_RE.sub(" ", text)
    text = _NEWLINE_SPACE_RE.sub("\n", text)
    text = _NEWLINE_RUN_RE.sub("\n\n", text)
    text = text.strip()
    return unicodedata.normalize("NFC", text)


def detect_language(text: str) -> str:
    """Classify text as "de", "en" or "und" by stopword ratio.

    The winning language needs a hit ratio of at least 0.05 and at least
    1.5x the other language's ratio; anything weaker is "und".
    """
    words = _WORD_RE.findall(text.lower())
    if not words:
        return "und"
    n = len(words)
    de = sum(1 for w in words if w in GERMAN_STOPWORDS) / n
    en = sum(1 for w in words if w in ENGLISH_STOPWORDS) / n
    if de >= 0.05 and de >= 1.5 * en:
        return "de"
    if en >= 0.05 and en >= 1.5 * de:
        return "en"
    return "und"


def _decode(data: bytes, path: str) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        logger.warning("lossy-decoding %s (invalid UTF-8)", path)
        try:
            return data.decode("utf-8", errors="replace")
        except Exception as exc:  # pragma: no cover - replace cannot fail
            raise DecodeError(f"cannot decode {path}: {exc}") from exc


def _doc_id(source_path: str, discriminator: str, text: str) -> str:
    h = hashlib.sha256()
    h.update(source_path.encode("utf-8"))
    h.update(b"\x00")
    h.update(discriminator.encode("utf-8"))
    h.update(b"\x00")
    h.update(text.encode("utf-8"))
    return h.hexdigest()[:16]


def _language_for(text: str, options: IngestOptions) -> str:
    lang = detect_language(text)
    if lang == "und" and options.language_hint:
        return options.language_hint
    return lang


def _render_row(header: list[str], row: list[str]) -> str:
    cells = []
    for i, value in enumerate(row):
        name = header[i] if i < len(header) else f"col{i + 1}"
        cells.append(f"{name.strip()}: {value.strip()}")
    return "; ".join(cells)


def _ingest_csv(path: Path, options: IngestOptions) -> list[SourceDocument]:
    text = _decode(path.read_bytes(), str(path))
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows:
        logger.warning("skipping empty CSV %s", path)
        return []
    header, data = rows[0], rows[1:]
    title = path.stem
    docs: list[SourceDocument] = []
    if options.spreadsheet_mode == "separate":
        for idx, row in enumerate(data):
            body = normalize_text(_render_row(header, row))
            if not body:
                logger.warning("skipping empty row %d of %s", idx + 1, path)
                continue
            docs.append(SourceDocument(
                doc_id=_doc_id(str(path), f"row:{idx}", body),
                source_path=str(path),
                text=body,
                language=_language_for(body, options),
                kind="tabular",
                metadata={"title": title, "row_index": str(idx)},
            ))
    else:
        body = normalize_text("\n".join(_render_row(header, row) for row in data))
        if not body:
            logger.warning("skipping %s: normalized to empty", path)
            return []
        docs.append(SourceDocument(
            doc_id=_doc_id(str(path), "sheet", body),
            source_path=str(path),
            text=body,
            language=_language_for(body, options),
            kind="tabular",
            metadata={"title": title},
        ))
    return docs


def ingest_file(path: str | Path, options: IngestOptions | None = None) -> list[SourceDocument]:
    """Ingest one file into zero or more SourceDocuments.

    Empty files are skipped with a warning rather than failing the run;
    unsupported extensions raise UnsupportedFormat.
    """
    options = options or IngestOptions()
    p = Path(path)
    ext = p.suffix.lower()
    if ext not in SUPPORTED_EXTENSIONS:
        raise UnsupportedFormat(f"unsupported extension {ext!r}: {p}")
    if ext == ".csv":
        return _ingest_csv(p, options)
    body = normalize_text(_decode(p.read_bytes(), str(p)))
    if not body:
        logger.warning("skipping %s: normalized to empty", p)
        return []
    return [SourceDocument(
        doc_id=_doc_id(str(p), "file", body),
        source_path=str(p),
        text=body,
        language=_language_for(body, options),
        kind="prose",
        metadata={"title": p.stem},
    )]


def ingest_dir(directory: str | Path, options: IngestOptions | None = None) -> list[SourceDocument]:
    """Ingest every supported file under a directory (recursive, sorted)."""
    options = options or IngestOptions()
    root = Path(directory)
    docs: list[SourceDocument] = []
    for p in sorted(root.rglob("*")):
        if not p.is_file():
            continue
        if p.suffix.lower() not in SUPPORTED_EXTENSIONS:
            logger.info("ignoring %s (unsupported extension)", p)
            continue
        docs.extend(ingest_file(p, options))
    return docs


def write_corpus(corpus_dir: str | Path, docs: list[SourceDocument],
                 options: IngestOptions) -> Path:
    """Write manifest.json plus the full documents as docs.jsonl."""
    out = Path(corpus_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "created_at": datetime.now(timezone.utc).isoformat(),
        "ingest_options": {
            "spreadsheet_mode": options.spreadsheet_mode,
            "language_hint": options.language_hint,
            "pdf_text_only": options.pdf_text_only,
        },
        "documents": [d.summary() for d in sorted(docs, key=lambda d: d.doc_id)],
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False, sort_keys=True), encoding="utf-8")
    with (out / "docs.jsonl").open("w", encoding="utf-8") as fh:
        for d in sorted(docs, key=lambda d: d.doc_id):
            fh.write(json.dumps({
                "doc_id": d.doc_id, "source_path": d.source_path, "text": d.text,
                "language": d.language, "kind": d.kind, "metadata": d.metadata,
            }, ensure_ascii=False) + "\n")
    return out / "manifest.json"


def read_corpus(corpus_dir: str | Path) -> list[SourceDocument]:
    """Load documents previously written by write_corpus."""
    docs = []
    with (Path(corpus_dir) / "docs.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            docs.append(SourceDocument(**rec))
    return docs
