"""Per-run metric aggregation into deterministic reports.

A MetricReport carries per-record scores plus per-configuration means and
the valid-response rate. Metric failures (missing reference, empty answer,
judge errors) become per-record warnings - the run never aborts. Report
JSON is deterministic for identical inputs: sorted keys, no timestamps, no
latency values.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import QuestfillError
from ..httpclient import InferenceClient
from ..ragcore import AnswerRecord
from .bertscore import TokenEmbedder, bertscore_texts, hashed_token_embedder
from .geval import GEVAL_DIMENSIONS, JudgeConfig, geval_score
from .meteor import meteor

logger = logging.getLogger(__name__)

# Table-2-style flat export column order.
CSV_COLUMNS = ("question_id", "meteor", "bert_precision", "bert_recall", "bert_f1")


@dataclass
class MetricScores:
    meteor: float | None = None
    bert_precision: float | None = None
    bert_recall: float | None = None
    bert_f1: float | None = None
    geval: dict[str, float] | None = None


@dataclass
class EvalOptions:
    token_embedder: TokenEmbedder | None = None  # defaults to hashed, dim 256
    token_embedder_tag: str = "hashed-trigram-256"
    meteor_language: str | None = None  # None = detect per record from the question
    judge: JudgeConfig | None = None  # None disables judge scoring
    judge_client: InferenceClient | None = None
    geval_dimensions: tuple[str, ...] = GEVAL_DIMENSIONS


@dataclass
class MetricReport:
    config_code: str
    n: int
    valid_rate: float
    meteor_mean: float | None
    bert_p_mean: float | None
    bert_r_mean: float | None
    bert_f1_mean: float | None
    geval: dict[str, float] | None
    per_record: list[dict]
    warnings: list[str] = field(default_factory=list)
    token_model_tag: str = ""

    def to_json(self) -> str:
        payload = {
            "config_code": self.config_code,
            "n": self.n,
            "valid_rate": self.valid_rate,
            "meteor_mean": self.meteor_mean,
            "bert_p_mean": self.bert_p_mean,
            "bert_r_mean": self.bert_r_mean,
            "bert_f1_mean": self.bert_f1_mean,
            "geval": self.geval,
            "per_record": self.per_record,
            "warnings": self.warnings,
            "token_model_tag": self.token_model_tag,
        }
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        rec = json.loads(text)
        return cls(config_code=rec["config_code"], n=rec["n"],
                   valid_rate=rec["valid_rate"], meteor_mean=rec["meteor_mean"],
                   bert_p_mean=rec["bert_p_mean"], bert_r_mean=rec["bert_r_mean"],
                   bert_f1_mean=rec["bert_f1_mean"], geval=rec.get("geval"),
                   per_record=rec.get("per_record", []),
                   warnings=rec.get("warnings", []),
                   token_model_tag=rec.get("token_model_tag", ""))

    @classmethod
    def load(cls, path: str | Path) -> "MetricReport":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def to_csv(self) -> str:
        """Flat per-record export in Table-2 metric column order."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in self.per_record:
            writer.writerow([rec["question_id"]] +
                            [rec.get(col, "") if rec.get(col) is not None else ""
                             for col in CSV_COLUMNS[1:]])
        return buf.getvalue()


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _score_record(record: AnswerRecord, reference: str | None, options: EvalOptions,
                  token_embedder: TokenEmbedder,
                  warnings: list[str]) -> MetricScores:
    from ..corpus import detect_language

    scores = MetricScores()
    if reference is None:
        warnings.append(f"{record.question_id}: no reference answer; surface metrics skipped")
        return scores
    language = options.meteor_language or detect_language(record.question_text)
    scores.meteor = meteor(record.final_answer, reference, language)
    try:
        bs = bertscore_texts(record.final_answer, reference, token_embedder)
        scores.bert_precision = bs.precision
        scores.bert_recall = bs.recall
        scores.bert_f1 = bs.f1
    except QuestfillError as exc:
        warnings.append(f"{record.question_id}: bertscore failed: {exc}")
    if options.judge is not None:
        context = "\n".join(h.text for h in record.retrieved.hits)
        geval: dict[str, float] = {}
        for dimension in options.geval_dimensions:
            try:
                geval[dimension] = geval_score(
                    record.question_text, record.final_answer, context, reference,
                    dimension, options.judge, client=options.judge_client)
            except QuestfillError as exc:
                warnings.append(f"{record.question_id}: {dimension} failed: {exc}")
        scores.geval = geval or None
    return scores


def evaluate_run(answers: list[AnswerRecord], references: dict[str, str],
                 options: EvalOptions | None = None,
                 config_code: str | None = None) -> MetricReport:
    """Score every answer and aggregate into one report."""
    options = options or EvalOptions()
    token_embedder = options.token_embedder or hashed_token_embedder(256)
    warnings: list[str] = []
    per_record: list[dict] = []
    meteors, ps, rs, f1s = [], [], [], []
    geval_values: dict[str, list[float]] = {d: [] for d in options.geval_dimensions}

    for record in answers:
        scores = _score_record(record, references.get(record.question_id),
                               options, token_embedder, warnings)
        entry = {
            "question_id": record.question_id,
            "valid": record.valid,
            "invalid_reason": record.invalid_reason,
            "meteor": scores.meteor,
            "bert_precision": scores.bert_precision,
            "bert_recall": scores.bert_recall,
            "bert_f1": scores.bert_f1,
            "geval": scores.geval,
        }
        per_record.append(entry)
        if scores.meteor is not None:
            meteors.append(scores.meteor)
        if scores.bert_f1 is not None:
            ps.append(scores.bert_precision)
            rs.append(scores.bert_recall)
            f1s.append(scores.bert_f1)
        if scores.geval:
            for dimension, value in scores.geval.items():
                geval_values[dimension].append(value)

    n = len(answers)
    geval_means = {d: _mean(v) for d, v in geval_values.items() if v}
    return MetricReport(
        config_code=config_code or (answers[0].config_code if answers else ""),
        n=n,
        valid_rate=(sum(1 for a in answers if a.valid) / n) if n else 0.0,
        meteor_mean=_mean(meteors),
        bert_p_mean=_mean(ps),
        bert_r_mean=_mean(rs),
        bert_f1_mean=_mean(f1s),
        geval=geval_means or None,
        per_record=per_record,
        warnings=warnings,
        token_model_tag=options.token_embedder_tag,
    )
