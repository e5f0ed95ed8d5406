"""Configuration-code matrix: encode, run and compare pipeline configurations.

A configuration code is a 4-5 character label, e.g. "SLOC" or "SLOBE":

  position 1: retrieval   S=similarity, M=mmr
  position 2: model role  L=llama_like, M=mistral_like
  position 3: placement   O=instructions at start, N=start and end
  position 4: chunk size  B=150, C=512
  suffix E (optional):    spreadsheets ingested one document per row

Model roles bind to concrete endpoint model names via the runtime config,
so the matrix runs against any OpenAI-compatible server.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .corpus import IngestOptions, detect_language, ingest_dir
from .embedder import EmbedderConfig, embed_batch
from .errors import QuestfillError, UnknownCode
from .evalkit import EvalOptions, MetricReport, evaluate_run
from .httpclient import InferenceClient
from .ragcore import (
    PLACEMENT_N,
    PLACEMENT_O,
    AnswerRecord,
    GenerationConfig,
    PromptSpec,
    answer_question,
)
from .splitter import SplitConfig, split_corpus
from .vindex import RetrievalConfig, VectorIndex

logger = logging.getLogger(__name__)

CODE_RE = re.compile(r"^([SM])([LM])([ON])([BC])(E?)$")

#: The ten standard configuration codes.
STANDARD_CODES = ("SLOBE", "SLOB", "SLNC", "SMNC", "MLNC", "MMNC",
                  "SLOC", "SMOC", "MLOC", "MMOC")

_RETRIEVAL = {"S": "similarity", "M": "mmr"}
_MODEL = {"L": "llama_like", "M": "mistral_like"}
_PLACEMENT = {"O": PLACEMENT_O, "N": PLACEMENT_N}
_CHUNK = {"B": 150, "C": 512}

# Published reference results for the standard codes (surface metrics for
# all ten, judge scores for three). Shown beside local results for context
# only - never used as test expectations; local numbers depend entirely on
# the corpus and models in play.
REFERENCE_RESULTS = {
    "SLOBE": {"meteor": 0.114, "bert_p": 0.634, "bert_r": 0.655, "bert_f1": 0.643},
    "SLOB": {"meteor": 0.139, "bert_p": 0.693, "bert_r": 0.692, "bert_f1": 0.692,
             "geval": {"context_precision": 4.0535, "context_recall": 3.689,
                       "faithfulness": 3.5, "answer_relevancy": 4.5}},
    "SLNC": {"meteor": 0.128, "bert_p": 0.694, "bert_r": 0.689, "bert_f1": 0.691,
             "geval": {"context_precision": 3.568, "context_recall": 3.281,
                       "faithfulness": 2.35, "answer_relevancy": 3.0}},
    "SMNC": {"meteor": 0.093, "bert_p": 0.699, "bert_r": 0.675, "bert_f1": 0.686},
    "MLNC": {"meteor": 0.133, "bert_p": 0.694, "bert_r": 0.689, "bert_f1": 0.691},
    "MMNC": {"meteor": 0.111, "bert_p": 0.698, "bert_r": 0.682, "bert_f1": 0.689},
    "SLOC": {"meteor": 0.138, "bert_p": 0.683, "bert_r": 0.691, "bert_f1": 0.687,
             "geval": {"context_precision": 3.6206, "context_recall": 3.339,
                       "faithfulness": 2.078, "answer_relevancy": 3.68}},
    "SMOC": {"meteor": 0.101, "bert_p": 0.683, "bert_r": 0.6708, "bert_f1": 0.676},
    "MLOC": {"meteor": 0.149, "bert_p": 0.688, "bert_r": 0.694, "bert_f1": 0.691},
    "MMOC": {"meteor": 0.108, "bert_p": 0.681, "bert_r": 0.6702, "bert_f1": 0.674},
}


@dataclass
class PipelineConfig:
    code: str
    retrieval: str  # "similarity" | "mmr"
    model_role: str  # "llama_like" | "mistral_like"
    placement: str  # PLACEMENT_O | PLACEMENT_N
    chunk_size: int
    overlap: int = 0
    spreadsheet_mode: str = "standard"
    k: int = 20
    mmr_lambda: float = 0.5

    def __post_init__(self):
        if self.chunk_size <= self.overlap:
            raise ValueError("chunk_size must exceed overlap")

    def retrieval_config(self) -> RetrievalConfig:
        return RetrievalConfig(technique=self.retrieval, k=self.k,
                               mmr_lambda=self.mmr_lambda)


def parse_config_code(code: str) -> PipelineConfig:
    m = CODE_RE.match(code)
    if not m:
        raise UnknownCode(f"configuration code {code!r} does not match [SM][LM][ON][BC]E?")
    retrieval, model, placement, chunk, excel = m.groups()
    return PipelineConfig(
        code=code,
        retrieval=_RETRIEVAL[retrieval],
        model_role=_MODEL[model],
        placement=_PLACEMENT[placement],
        chunk_size=_CHUNK[chunk],
        spreadsheet_mode="separate" if excel else "standard",
    )


def format_config_code(cfg: PipelineConfig) -> str:
    pos1 = {v: k for k, v in _RETRIEVAL.items()}[cfg.retrieval]
    pos2 = {v: k for k, v in _MODEL.items()}[cfg.model_role]
    pos3 = {v: k for k, v in _PLACEMENT.items()}[cfg.placement]
    pos4 = {v: k for k, v in _CHUNK.items()}.get(cfg.chunk_size)
    if pos4 is None:
        raise UnknownCode(f"chunk size {cfg.chunk_size} has no code letter")
    suffix = "E" if cfg.spreadsheet_mode == "separate" else ""
    return f"{pos1}{pos2}{pos3}{pos4}{suffix}"


@dataclass
class Question:
    question_id: str
    question_text: str
    reference_answer: str | None = None


def load_questionnaire(path: str | Path) -> list[Question]:
    """Read a questionnaire CSV (question_id, question_text[, reference_answer])
    or the JSONL equivalent."""
    p = Path(path)
    questions: list[Question] = []
    if p.suffix.lower() in (".jsonl", ".json"):
        for line in p.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            questions.append(Question(str(rec["question_id"]), rec["question_text"],
                                      rec.get("reference_answer")))
    else:
        with p.open(newline="", encoding="utf-8-sig") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"question_id", "question_text"} <= set(reader.fieldnames):
                raise QuestfillError(
                    f"{p}: questionnaire needs question_id and question_text columns")
            for row in reader:
                questions.append(Question(row["question_id"].strip(),
                                          row["question_text"].strip(),
                                          (row.get("reference_answer") or "").strip() or None))
    if not questions:
        raise QuestfillError(f"{p}: questionnaire is empty")
    return questions


@dataclass
class RuntimeConfig:
    """Endpoints, model bindings and pipeline defaults for matrix runs."""

    llm_url: str = ""
    embed_url: str = ""
    model_map: dict[str, str] = field(default_factory=lambda: {
        "llama_like": "llama3", "mistral_like": "mistral-instruct"})
    embedder_backend: str = "hashed"
    embed_dim: int = 256
    embed_batch_size: int = 32
    split_strategy: str = "recursive"
    temperature: float = 0.0
    max_tokens: int = 1024
    prompt_max_chars: int | None = None
    timeout_ms: int = 60_000
    max_retries: int = 3
    workers: int = 4  # per-question worker pool width
    geval: bool = False
    judge_url: str = ""
    judge_model: str = ""

    def embedder_config(self) -> EmbedderConfig:
        return EmbedderConfig(backend=self.embedder_backend, endpoint_url=self.embed_url,
                              model_name="", dim=self.embed_dim,
                              batch_size=self.embed_batch_size,
                              timeout_ms=self.timeout_ms, max_retries=self.max_retries)

    def generation_config(self, model_role: str) -> GenerationConfig:
        return GenerationConfig(endpoint_url=self.llm_url,
                                model_name=self.model_map[model_role],
                                temperature=self.temperature, max_tokens=self.max_tokens,
                                timeout_ms=self.timeout_ms, max_retries=self.max_retries)

    def eval_options(self) -> EvalOptions:
        options = EvalOptions()
        if self.geval:
            from .evalkit import JudgeConfig
            options.judge = JudgeConfig(endpoint_url=self.judge_url or self.llm_url,
                                        model_name=self.judge_model or "judge",
                                        timeout_ms=self.timeout_ms,
                                        max_retries=self.max_retries)
        return options


def build_index_for_config(corpus_dir: str | Path, cfg: PipelineConfig,
                           runtime: RuntimeConfig,
                           client: InferenceClient | None = None) -> VectorIndex:
    """Ingest, split and embed a corpus under one configuration."""
    docs = ingest_dir(corpus_dir, IngestOptions(spreadsheet_mode=cfg.spreadsheet_mode))
    if not docs:
        raise QuestfillError(f"no ingestable documents under {corpus_dir}")
    split_cfg = SplitConfig(chunk_size=cfg.chunk_size, overlap=cfg.overlap,
                            strategy=runtime.split_strategy)
    chunks = split_corpus(docs, split_cfg)
    embed_cfg = runtime.embedder_config()
    vectors = embed_batch([c.text for c in chunks], embed_cfg, client=client)
    index = VectorIndex(dim=vectors.shape[1], model_tag=embed_cfg.model_tag)
    index.add(zip(chunks, vectors))
    return index


def run_configuration(cfg: PipelineConfig, corpus_dir: str | Path,
                      questions: list[Question], runtime: RuntimeConfig,
                      llm_client: InferenceClient | None = None,
                      embed_client: InferenceClient | None = None,
                      ) -> tuple[MetricReport, list[AnswerRecord]]:
    """Full pipeline for one configuration code."""
    index = build_index_for_config(corpus_dir, cfg, runtime, client=embed_client)
    embed_cfg = runtime.embedder_config()
    gen_cfg = runtime.generation_config(cfg.model_role)
    retrieval_cfg = cfg.retrieval_config()
    if llm_client is None:
        llm_client = InferenceClient(runtime.llm_url, timeout_ms=runtime.timeout_ms,
                                     max_retries=runtime.max_retries)

    def answer_one(q: Question) -> AnswerRecord:
        language = detect_language(q.question_text)
        qvec = embed_batch([q.question_text], embed_cfg, client=embed_client)[0]
        retrieved = index.search(qvec, retrieval_cfg, query_echo=q.question_text)
        spec = PromptSpec.for_language(language, placement=cfg.placement,
                                       max_chars=runtime.prompt_max_chars)
        return answer_question(
            q.question_id, q.question_text, retrieved=retrieved, prompt_spec=spec,
            gen_cfg=gen_cfg, config_code=cfg.code, client=llm_client,
            question_language=language)

    # bounded pool; results collected in questionnaire order regardless of
    # completion order, so reports stay deterministic
    if runtime.workers > 1:
        with ThreadPoolExecutor(max_workers=runtime.workers) as pool:
            answers = list(pool.map(answer_one, questions))
    else:
        answers = [answer_one(q) for q in questions]

    references = {q.question_id: q.reference_answer for q in questions
                  if q.reference_answer}
    options = runtime.eval_options()
    report = evaluate_run(answers, references, options, config_code=cfg.code)
    return report, answers


def _write_run_artifacts(run_dir: Path, code: str, report: MetricReport,
                         answers: list[AnswerRecord]) -> None:
    code_dir = run_dir / code
    code_dir.mkdir(parents=True, exist_ok=True)
    (code_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    with (code_dir / "answers.jsonl").open("w", encoding="utf-8") as fh:
        for a in answers:
            fh.write(json.dumps(a.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def run_matrix(corpus_dir: str | Path, questionnaire_path: str | Path,
               codes: list[str], runtime: RuntimeConfig,
               out_dir: str | Path | None = None, run_id: str | None = None,
               llm_client: InferenceClient | None = None,
               embed_client: InferenceClient | None = None,
               parallel_configs: bool = False) -> list[MetricReport]:
    """Run every requested configuration; per-code failures never stop the run.

    Artifacts land under out_dir/<run_id>/<code>/ (answers.jsonl holds the
    raw records including latency; report.json is fully deterministic).
    Configurations run sequentially unless parallel_configs is set; each
    code writes to its own directory either way.
    """
    questions = load_questionnaire(questionnaire_path)
    configs = [parse_config_code(code) for code in codes]  # UnknownCode before work
    run_dir: Path | None = None
    if out_dir is not None:
        run_id = run_id or datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        run_dir = Path(out_dir) / run_id
        run_dir.mkdir(parents=True, exist_ok=True)

    def run_one(cfg: PipelineConfig) -> tuple[MetricReport, list[AnswerRecord]]:
        try:
            return run_configuration(cfg, corpus_dir, questions, runtime,
                                     llm_client=llm_client,
                                     embed_client=embed_client)
        except QuestfillError as exc:
            logger.error("configuration %s failed: %s", cfg.code, exc)
            report = MetricReport(config_code=cfg.code, n=0, valid_rate=0.0,
                                  meteor_mean=None, bert_p_mean=None,
                                  bert_r_mean=None, bert_f1_mean=None, geval=None,
                                  per_record=[], warnings=[f"run failed: {exc}"])
            return report, []

    if parallel_configs and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=min(4, len(configs))) as pool:
            outcomes = list(pool.map(run_one, configs))
    else:
        outcomes = [run_one(cfg) for cfg in configs]

    reports: list[MetricReport] = []
    for cfg, (report, answers) in zip(configs, outcomes):
        reports.append(report)
        if run_dir is not None:
            _write_run_artifacts(run_dir, cfg.code, report, answers)
    return reports


# --- comparison ---

COMPARISON_COLUMNS = ("code", "valid_rate", "meteor", "bert_p", "bert_r", "bert_f1",
                      "geval_cp", "geval_cr", "geval_faith", "geval_rel")

_GEVAL_KEYS = {"geval_cp": "context_precision", "geval_cr": "context_recall",
               "geval_faith": "faithfulness", "geval_rel": "answer_relevancy"}


def _report_row(report: MetricReport) -> dict:
    row = {
        "code": report.config_code,
        "valid_rate": report.valid_rate,
        "meteor": report.meteor_mean,
        "bert_p": report.bert_p_mean,
        "bert_r": report.bert_r_mean,
        "bert_f1": report.bert_f1_mean,
    }
    for col, key in _GEVAL_KEYS.items():
        row[col] = (report.geval or {}).get(key)
    return row


@dataclass
class ComparisonTable:
    rows: list[dict]
    best: dict[str, str | None]  # column -> code with the best (highest) value

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "best": self.best},
                          indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = []
        buf.append(",".join(COMPARISON_COLUMNS))
        for row in self.rows:
            cells = []
            for col in COMPARISON_COLUMNS:
                value = row.get(col)
                cells.append("" if value is None else
                             (value if isinstance(value, str) else f"{value:.6f}"))
            buf.append(",".join(cells))
        return "\n".join(buf) + "\n"

    def to_text(self, include_reference: bool = False) -> str:
        widths = {col: max(len(col), 10) for col in COMPARISON_COLUMNS}
        lines = ["  ".join(col.ljust(widths[col]) for col in COMPARISON_COLUMNS)]
        for row in self.rows:
            cells = []
            for col in COMPARISON_COLUMNS:
                value = row.get(col)
                if value is None:
                    text = "-"
                elif isinstance(value, str):
                    text = value
                else:
                    text = f"{value:.4f}"
                    if self.best.get(col) == row["code"]:
                        text += "*"
                cells.append(text.ljust(widths[col]))
            lines.append("  ".join(cells))
        lines.append("(* best value in column)")
        if include_reference:
            lines.append("")
            lines.append("Published reference results (context only, not expectations):")
            for code in STANDARD_CODES:
                ref = REFERENCE_RESULTS.get(code)
                if not ref:
                    continue
                lines.append(f"  {code:6s} meteor={ref['meteor']:.3f} "
                             f"bert_p={ref['bert_p']:.3f} bert_r={ref['bert_r']:.4f} "
                             f"bert_f1={ref['bert_f1']:.3f}")
        return "\n".join(lines) + "\n"


def compare_reports(reports: list[MetricReport]) -> ComparisonTable:
    """Tabulate reports; flags the best (highest) value per metric column."""
    if not reports:
        raise QuestfillError("compare_reports needs at least one report")
    rows = [_report_row(r) for r in reports]
    best: dict[str, str | None] = {}
    for col in COMPARISON_COLUMNS[1:]:
        scored = [(row[col], row["code"]) for row in rows if row.get(col) is not None]
        best[col] = max(scored)[1] if scored else None
    return ComparisonTable(rows=rows, best=best)
