"""Judge-model scoring of answers on four rubric dimensions.

Each dimension ships a versioned rubric template instructing the judge to
finish with "SCORE: <number 1-5>". Samples are parsed with a strict regex;
a failed parse triggers exactly one re-ask before the sample is dropped.
Scores outside [1, 5] count as parse failures, never get clipped.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from importlib import resources as importlib_resources

from ..errors import JudgeUnparseable
from ..httpclient import InferenceClient

logger = logging.getLogger(__name__)

GEVAL_DIMENSIONS = ("context_precision", "context_recall", "faithfulness",
                    "answer_relevancy")

_SCORE_RE = re.compile(r"SCORE:\s*([1-5](?:\.\d+)?)")

_REASK_NUDGE = ("Your previous reply did not contain a parseable score. "
                "Reply again and make sure the final line is exactly "
                "'SCORE: <number 1-5>'.")


@dataclass
class JudgeConfig:
    endpoint_url: str = ""
    model_name: str = ""
    rubric_version: str = "v1"
    samples_per_item: int = 1
    temperature: float = 0.0
    timeout_ms: int = 60_000
    max_retries: int = 3

    def __post_init__(self):
        if self.samples_per_item < 1:
            raise ValueError("samples_per_item must be >= 1")


def rubric_template(dimension: str, version: str = "v1") -> str:
    if dimension not in GEVAL_DIMENSIONS:
        raise ValueError(f"unknown dimension: {dimension!r}")
    ref = importlib_resources.files("questfill.resources") / f"rubrics/{dimension}_{version}.txt"
    return ref.read_text(encoding="utf-8")


def parse_score(reply: str) -> float | None:
    """Last SCORE match as float, or None when absent or out of range."""
    matches = _SCORE_RE.findall(reply)
    if not matches:
        return None
    value = float(matches[-1])
    if not 1.0 <= value <= 5.0:
        return None
    return value


def geval_score(question: str, answer: str, retrieved_context: str, reference: str,
                dimension: str, cfg: JudgeConfig,
                client: InferenceClient | None = None) -> float:
    """Mean of parseable judge samples for one dimension, in [1, 5]."""
    prompt = rubric_template(dimension, cfg.rubric_version).format(
        question=question, answer=answer, context=retrieved_context,
        reference=reference)
    client = client or InferenceClient(cfg.endpoint_url, timeout_ms=cfg.timeout_ms,
                                       max_retries=cfg.max_retries)

    def ask(extra: str | None = None) -> str:
        messages = [{"role": "user", "content": prompt}]
        if extra:
            messages.append({"role": "user", "content": extra})
        return client.chat(cfg.model_name, messages, temperature=cfg.temperature)

    values: list[float] = []
    for sample in range(cfg.samples_per_item):
        value = parse_score(ask())
        if value is None:
            logger.info("judge sample %d unparseable for %s; re-asking", sample, dimension)
            value = parse_score(ask(_REASK_NUDGE))
        if value is None:
            logger.warning("judge sample %d dropped for %s", sample, dimension)
            continue
        values.append(value)
    if not values:
        raise JudgeUnparseable(f"no parseable judge sample for dimension {dimension}")
    return sum(values) / len(values)
