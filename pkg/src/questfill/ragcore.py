"""Prompt assembly, answer generation and answer post-processing.

Prompt placement strategies:

* O_start          - instructions once, at the top of the prompt.
* N_start_and_end  - the same instructions repeated verbatim after the
                     question (start and end).

Post-processing removes duplicate sentences, filters sentences in the
wrong language, and classifies the answer as valid or invalid with one of
four reasons (empty, wrong_language, refusal, degenerate_repetition).
"""

from __future__ import annotations

import functools
import logging
import re
import time
import unicodedata
from dataclasses import dataclass
from importlib import resources as importlib_resources

from .corpus import detect_language
from .errors import ContextOverflow
from .httpclient import InferenceClient
from .vindex import Hit, RetrievalResult

logger = logging.getLogger(__name__)

PLACEMENT_O = "O_start"
PLACEMENT_N = "N_start_and_end"

_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")
_WS_RE = re.compile(r"\s+")


@functools.lru_cache(maxsize=None)
def _resource_text(name: str) -> str:
    ref = importlib_resources.files("questfill.resources") / name
    return ref.read_text(encoding="utf-8")


def default_instruction(language: str) -> str:
    name = "prompts/instruction_de.txt" if language == "de" else "prompts/instruction_en.txt"
    return _resource_text(name).strip()


def default_language_directive(language: str) -> str | None:
    if language == "de":
        return _resource_text("prompts/language_directive_de.txt").strip()
    if language == "en":
        return _resource_text("prompts/language_directive_en.txt").strip()
    return None


@functools.lru_cache(maxsize=1)
def refusal_patterns() -> tuple[str, ...]:
    lines = _resource_text("prompts/refusal_patterns.txt").splitlines()
    return tuple(ln.strip() for ln in lines if ln.strip() and not ln.startswith("#"))


@dataclass
class PromptSpec:
    placement: str = PLACEMENT_O
    instruction_text: str = ""
    language_directive: str | None = None
    context_header: str = "Context:"
    question_header: str = "Question:"
    max_chars: int | None = None  # prompt character budget; None = unlimited

    def __post_init__(self):
        if self.placement not in (PLACEMENT_O, PLACEMENT_N):
            raise ValueError(f"unknown placement: {self.placement!r}")
        if not self.instruction_text:
            raise ValueError("instruction_text must be non-empty")

    @classmethod
    def for_language(cls, language: str, placement: str = PLACEMENT_O,
                     max_chars: int | None = None) -> "PromptSpec":
        return cls(placement=placement,
                   instruction_text=default_instruction(language),
                   language_directive=default_language_directive(language),
                   context_header="Kontext:" if language == "de" else "Context:",
                   question_header="Frage:" if language == "de" else "Question:",
                   max_chars=max_chars)


@dataclass
class GenerationConfig:
    endpoint_url: str = ""
    model_name: str = ""
    temperature: float = 0.0  # 0 keeps runs reproducible
    max_tokens: int = 1024
    timeout_ms: int = 60_000
    max_retries: int = 3

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass
class PostprocessResult:
    final: str
    valid: bool
    invalid_reason: str | None  # empty | wrong_language | refusal | degenerate_repetition


@dataclass
class AnswerRecord:
    question_id: str
    question_text: str
    raw_answer: str
    final_answer: str
    retrieved: RetrievalResult
    valid: bool
    invalid_reason: str | None
    config_code: str
    latency_ms: int

    def to_json(self) -> dict:
        return {
            "question_id": self.question_id,
            "question_text": self.question_text,
            "raw_answer": self.raw_answer,
            "final_answer": self.final_answer,
            "retrieved": {
                "technique_used": self.retrieved.technique_used,
                "query_echo": self.retrieved.query_echo,
                "hits": [{"chunk_id": h.chunk_id, "score": h.score, "text": h.text}
                         for h in self.retrieved.hits],
            },
            "valid": self.valid,
            "invalid_reason": self.invalid_reason,
            "config_code": self.config_code,
            "latency_ms": self.latency_ms,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "AnswerRecord":
        retrieved = RetrievalResult(
            hits=[Hit(h["chunk_id"], h["score"], h["text"])
                  for h in rec["retrieved"]["hits"]],
            query_echo=rec["retrieved"]["query_echo"],
            technique_used=rec["retrieved"]["technique_used"],
        )
        return cls(question_id=rec["question_id"], question_text=rec["question_text"],
                   raw_answer=rec["raw_answer"], final_answer=rec["final_answer"],
                   retrieved=retrieved, valid=rec["valid"],
                   invalid_reason=rec["invalid_reason"], config_code=rec["config_code"],
                   latency_ms=rec["latency_ms"])


def _assemble(question: str, chunk_texts: list[str], spec: PromptSpec) -> str:
    blocks = [spec.instruction_text]
    if spec.language_directive:
        blocks.append(spec.language_directive)
    context_lines = "\n".join(f"[{i + 1}] {text}" for i, text in enumerate(chunk_texts))
    blocks.append(f"{spec.context_header}\n{context_lines}" if chunk_texts
                  else spec.context_header)
    blocks.append(f"{spec.question_header}\n{question}")
    if spec.placement == PLACEMENT_N:
        blocks.append(spec.instruction_text)
        if spec.language_directive:
            blocks.append(spec.language_directive)
    return "\n\n".join(blocks)


def build_prompt(question: str, hits: RetrievalResult | list[Hit],
                 spec: PromptSpec) -> str:
    """Assemble the prompt; byte-deterministic for identical inputs.

    If the prompt exceeds spec.max_chars, lowest-ranked chunks are dropped
    (from the end of the hit list) until it fits; the question and the
    instructions are never truncated.
    """
    hit_list = hits.hits if isinstance(hits, RetrievalResult) else list(hits)
    texts = [h.text for h in hit_list]
    prompt = _assemble(question, texts, spec)
    if spec.max_chars is None:
        return prompt
    while len(prompt) > spec.max_chars and texts:
        texts.pop()
        prompt = _assemble(question, texts, spec)
    if len(prompt) > spec.max_chars:
        raise ContextOverflow(
            f"prompt is {len(prompt)} chars with no context left; budget {spec.max_chars}")
    return prompt


def generate(prompt: str, cfg: GenerationConfig,
             client: InferenceClient | None = None) -> str:
    """Call the chat endpoint; an empty completion maps to ""."""
    client = client or InferenceClient(cfg.endpoint_url, timeout_ms=cfg.timeout_ms,
                                       max_retries=cfg.max_retries)
    return client.chat(cfg.model_name, [{"role": "user", "content": prompt}],
                       temperature=cfg.temperature, max_tokens=cfg.max_tokens)


def split_sentences(text: str) -> list[str]:
    text = text.strip()
    if not text:
        return []
    return [s for s in _SENTENCE_SPLIT_RE.split(text) if s.strip()]


def _normalize_sentence(sentence: str) -> str:
    return _WS_RE.sub(" ", unicodedata.normalize("NFC", sentence)).strip().casefold()


def _opposite(language: str) -> str:
    return "en" if language == "de" else "de"


def postprocess(raw: str, question_language: str) -> PostprocessResult:
    """Deduplicate, language-filter and validate a raw answer.

    Invalid reasons, in precedence order: degenerate_repetition (a sentence
    occurs 3+ times in the raw answer), wrong_language (more than half of
    the original sentences were off-language), refusal (final text starts
    with a known refusal phrase), empty.
    """
    sentences = split_sentences(raw)
    total = len(sentences)

    counts: dict[str, int] = {}
    for s in sentences:
        key = _normalize_sentence(s)
        counts[key] = counts.get(key, 0) + 1
    degenerate = any(c >= 3 for c in counts.values())

    seen: set[str] = set()
    deduped: list[str] = []
    for s in sentences:
        key = _normalize_sentence(s)
        if key in seen:
            continue
        seen.add(key)
        deduped.append(s)

    dropped_language = 0
    kept: list[str] = []
    if question_language in ("de", "en"):
        for s in deduped:
            if detect_language(s) == _opposite(question_language):
                dropped_language += 1
            else:
                kept.append(s)
    else:
        kept = deduped

    final = " ".join(s.strip() for s in kept).strip()

    if degenerate:
        return PostprocessResult(final, False, "degenerate_repetition")
    if total and dropped_language * 2 > total:
        return PostprocessResult(final, False, "wrong_language")
    lowered = final.casefold()
    for pattern in refusal_patterns():
        if lowered.startswith(pattern.casefold()):
            return PostprocessResult(final, False, "refusal")
    if not final:
        return PostprocessResult(final, False, "empty")
    return PostprocessResult(final, True, None)


def answer_question(question_id: str, question_text: str, *, retrieved: RetrievalResult,
                    prompt_spec: PromptSpec, gen_cfg: GenerationConfig,
                    config_code: str = "", client: InferenceClient | None = None,
                    question_language: str | None = None) -> AnswerRecord:
    """Run prompt -> generate -> postprocess for one question."""
    language = question_language or detect_language(question_text)
    prompt = build_prompt(question_text, retrieved, prompt_spec)
    started = time.perf_counter()
    raw = generate(prompt, gen_cfg, client=client)
    latency_ms = int((time.perf_counter() - started) * 1000)
    post = postprocess(raw, language)
    return AnswerRecord(question_id=question_id, question_text=question_text,
                        raw_answer=raw, final_answer=post.final,
                        retrieved=retrieved, valid=post.valid,
                        invalid_reason=post.invalid_reason, config_code=config_code,
                        latency_ms=latency_ms)
