"""HTTP API for corpus management, questionnaire sessions and answer review.

State is append-only: every mutation is written to a JSON-lines event log
under the state directory and folded into a periodic snapshot, so a restart
replays to exactly the same sessions. Per-session operations serialize
through a per-session lock, keeping answer-history ordering deterministic.

Pipeline indexes are built lazily per (corpus, ingest/split/embed settings)
and cached on disk, so sessions with different chunk sizes or spreadsheet
handling coexist over one uploaded corpus.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .corpus import IngestOptions, detect_language, ingest_dir
from .embedder import embed_batch
from .errors import QuestfillError, UnknownCode
from .expmatrix import PipelineConfig, RuntimeConfig, parse_config_code
from .ragcore import AnswerRecord, PromptSpec, answer_question
from .splitter import SplitConfig, split_corpus
from .vindex import RetrievalConfig, VectorIndex

logger = logging.getLogger(__name__)

SNAPSHOT_EVERY = 100

REVIEW_STATES = ("pending", "accepted", "edited", "rejected")

# Override surface exposed to clients; mirrored by GET /api/schema.
OVERRIDE_FIELDS = {
    "retrieval": {"type": "enum", "values": ["similarity", "mmr"]},
    "k": {"type": "int", "min": 1, "max": 100},
    "lambda": {"type": "float", "min": 0.0, "max": 1.0},
    "placement": {"type": "enum", "values": ["O_start", "N_start_and_end"]},
    "chunk_size": {"type": "int", "min": 50, "max": 4000},
    "overlap": {"type": "int", "min": 0, "max": 1000},
    "spreadsheet_mode": {"type": "enum", "values": ["standard", "separate"]},
    "model_role": {"type": "enum", "values": ["llama_like", "mistral_like"]},
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    state_dir: str = "qf_state"
    static_dir: str = ""
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        parser = configparser.ConfigParser()
        parser.read(path)
        cfg = cls()
        if parser.has_section("server"):
            s = parser["server"]
            cfg.host = s.get("host", cfg.host)
            cfg.port = s.getint("port", cfg.port)
            cfg.state_dir = s.get("state_dir", cfg.state_dir)
            cfg.static_dir = s.get("static_dir", cfg.static_dir)
        if parser.has_section("endpoints"):
            e = parser["endpoints"]
            cfg.runtime.llm_url = e.get("llm_url", cfg.runtime.llm_url)
            cfg.runtime.embed_url = e.get("embed_url", cfg.runtime.embed_url)
            cfg.runtime.judge_url = e.get("judge_url", cfg.runtime.judge_url)
        if parser.has_section("models"):
            for role in ("llama_like", "mistral_like"):
                if parser.has_option("models", role):
                    cfg.runtime.model_map[role] = parser.get("models", role)
            if parser.has_option("models", "judge"):
                cfg.runtime.judge_model = parser.get("models", "judge")
        if parser.has_section("pipeline"):
            p = parser["pipeline"]
            cfg.runtime.embedder_backend = p.get("embedder", cfg.runtime.embedder_backend)
            cfg.runtime.embed_dim = p.getint("embed_dim", cfg.runtime.embed_dim)
            cfg.runtime.split_strategy = p.get("split_strategy", cfg.runtime.split_strategy)
            cfg.runtime.max_tokens = p.getint("max_tokens", cfg.runtime.max_tokens)
            cfg.runtime.temperature = p.getfloat("temperature", cfg.runtime.temperature)
        cfg.apply_env()
        return cfg

    def apply_env(self) -> None:
        """QF_PORT / QF_LLM_URL / QF_EMBED_URL override file values."""
        self.port = int(os.environ.get("QF_PORT", self.port))
        self.runtime.llm_url = os.environ.get("QF_LLM_URL", self.runtime.llm_url)
        self.runtime.embed_url = os.environ.get("QF_EMBED_URL", self.runtime.embed_url)


@dataclass
class ReviewEntry:
    state: str = "pending"
    revision: int | None = None  # index into the answer history
    edited_text: str | None = None

    def to_json(self) -> dict:
        return {"state": self.state, "revision": self.revision,
                "edited_text": self.edited_text}


@dataclass
class Session:
    session_id: str
    corpus_id: str
    config_code: str
    questionnaire: list[dict]  # {question_id, question_text, reference_answer}
    answers: dict[str, list[AnswerRecord]] = field(default_factory=dict)
    review_state: dict[str, ReviewEntry] = field(default_factory=dict)

    def view(self) -> dict:
        return {
            "session_id": self.session_id,
            "corpus_id": self.corpus_id,
            "config_code": self.config_code,
            "questionnaire": self.questionnaire,
            "answers": {qid: [a.to_json() for a in history]
                        for qid, history in self.answers.items()},
            "review_state": {qid: entry.to_json()
                             for qid, entry in self.review_state.items()},
        }


def _parse_questionnaire_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"question_id", "question_text"} <= set(reader.fieldnames):
        raise ValueError("questionnaire needs question_id and question_text columns")
    rows = []
    for row in reader:
        if not (row.get("question_id") or "").strip():
            raise ValueError("questionnaire row with empty question_id")
        rows.append({
            "question_id": row["question_id"].strip(),
            "question_text": (row.get("question_text") or "").strip(),
            "reference_answer": (row.get("reference_answer") or "").strip() or None,
        })
    if not rows:
        raise ValueError("questionnaire has no rows")
    return rows


class ServiceState:
    """Corpora + sessions with event-log persistence and index caching."""

    def __init__(self, state_dir: str | Path, runtime: RuntimeConfig):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.runtime = runtime
        self.corpora: dict[str, dict] = {}
        self.sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._global_lock = threading.Lock()
        self._events_since_snapshot = 0
        self._index_cache: dict[tuple[str, str], VectorIndex] = {}
        self._replay()

    # --- persistence ---

    @property
    def _events_path(self) -> Path:
        return self.state_dir / "events.jsonl"

    @property
    def _snapshot_path(self) -> Path:
        return self.state_dir / "snapshot.json"

    def _replay(self) -> None:
        if self._snapshot_path.exists():
            snap = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
            self.corpora = snap["corpora"]
            for sid, raw in snap["sessions"].items():
                self.sessions[sid] = self._session_from_json(raw)
        if self._events_path.exists():
            with self._events_path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._apply(json.loads(line))

    def _session_from_json(self, raw: dict) -> Session:
        session = Session(session_id=raw["session_id"], corpus_id=raw["corpus_id"],
                          config_code=raw["config_code"],
                          questionnaire=raw["questionnaire"])
        for qid, history in raw["answers"].items():
            session.answers[qid] = [AnswerRecord.from_json(a) for a in history]
        for qid, entry in raw["review_state"].items():
            session.review_state[qid] = ReviewEntry(**entry)
        return session

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "corpus":
            self.corpora[event["corpus_id"]] = {
                "corpus_id": event["corpus_id"], "name": event["name"],
                "dir": event["dir"], "n_files": event["n_files"],
            }
        elif kind == "session":
            self.sessions[event["session_id"]] = self._session_from_json(event["session"])
        elif kind == "answer":
            session = self.sessions[event["session_id"]]
            record = AnswerRecord.from_json(event["record"])
            session.answers.setdefault(event["question_id"], []).append(record)
            session.review_state.setdefault(event["question_id"], ReviewEntry())
        elif kind == "review":
            session = self.sessions[event["session_id"]]
            session.review_state[event["question_id"]] = ReviewEntry(
                state=event["state"], revision=event.get("revision"),
                edited_text=event.get("edited_text"))

    def _append_event(self, event: dict) -> None:
        self._apply(event)
        with self._global_lock:
            with self._events_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._events_since_snapshot += 1
            if self._events_since_snapshot >= SNAPSHOT_EVERY:
                self._write_snapshot()

    def _write_snapshot(self) -> None:
        snap = {
            "corpora": self.corpora,
            "sessions": {sid: s.view() for sid, s in self.sessions.items()},
        }
        tmp = self._snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(snap, ensure_ascii=False), encoding="utf-8")
        tmp.replace(self._snapshot_path)
        self._events_path.write_text("", encoding="utf-8")
        self._events_since_snapshot = 0

    def session_lock(self, session_id: str) -> threading.Lock:
        with self._global_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    # --- pipeline ---

    def create_corpus(self, name: str, files: list[tuple[str, bytes]]) -> dict:
        corpus_id = uuid.uuid4().hex[:12]
        raw_dir = self.state_dir / "corpora" / corpus_id / "raw"
        raw_dir.mkdir(parents=True, exist_ok=True)
        for filename, blob in files:
            safe = Path(filename).name
            (raw_dir / safe).write_bytes(blob)
        docs = ingest_dir(raw_dir, IngestOptions())
        if not docs:
            raise QuestfillError("no ingestable documents in upload")
        self._append_event({"type": "corpus", "corpus_id": corpus_id, "name": name,
                            "dir": str(raw_dir), "n_files": len(files)})
        return {"corpus_id": corpus_id, "name": name, "n_files": len(files),
                "n_docs": len(docs)}

    def _index_key(self, cfg: PipelineConfig) -> str:
        tag = self.runtime.embedder_config().model_tag
        return (f"{cfg.spreadsheet_mode}-{cfg.chunk_size}-{cfg.overlap}-"
                f"{self.runtime.split_strategy}-{tag}")

    def index_for(self, corpus_id: str, cfg: PipelineConfig) -> VectorIndex:
        key = self._index_key(cfg)
        cached = self._index_cache.get((corpus_id, key))
        if cached is not None:
            return cached
        corpus = self.corpora[corpus_id]
        cache_dir = self.state_dir / "corpora" / corpus_id / "cache"
        cache_dir.mkdir(parents=True, exist_ok=True)
        index_path = cache_dir / f"{key}.qfix"
        if index_path.exists():
            index = VectorIndex.load(index_path)
        else:
            docs = ingest_dir(corpus["dir"],
                              IngestOptions(spreadsheet_mode=cfg.spreadsheet_mode))
            chunks = split_corpus(docs, SplitConfig(chunk_size=cfg.chunk_size,
                                                    overlap=cfg.overlap,
                                                    strategy=self.runtime.split_strategy))
            embed_cfg = self.runtime.embedder_config()
            vectors = embed_batch([c.text for c in chunks], embed_cfg)
            index = VectorIndex(dim=vectors.shape[1], model_tag=embed_cfg.model_tag)
            index.add(zip(chunks, vectors))
            index.persist(index_path)
        self._index_cache[(corpus_id, key)] = index
        return index

    def generate_answer(self, session: Session, question_id: str,
                        overrides: dict) -> AnswerRecord:
        cfg = parse_config_code(session.config_code)
        cfg = _apply_overrides(cfg, overrides)
        question = next((q for q in session.questionnaire
                         if q["question_id"] == question_id), None)
        if question is None:
            raise KeyError(question_id)
        index = self.index_for(session.corpus_id, cfg)
        language = detect_language(question["question_text"])
        qvec = embed_batch([question["question_text"]],
                           self.runtime.embedder_config())[0]
        retrieval = RetrievalConfig(technique=cfg.retrieval, k=cfg.k,
                                    mmr_lambda=cfg.mmr_lambda)
        retrieved = index.search(qvec, retrieval, query_echo=question["question_text"])
        spec = PromptSpec.for_language(language, placement=cfg.placement,
                                       max_chars=self.runtime.prompt_max_chars)
        record = answer_question(
            question_id, question["question_text"], retrieved=retrieved,
            prompt_spec=spec, gen_cfg=self.runtime.generation_config(cfg.model_role),
            config_code=session.config_code, question_language=language)
        self._append_event({"type": "answer", "session_id": session.session_id,
                            "question_id": question_id, "record": record.to_json()})
        return record


_OVERRIDE_COERCE = {"k": int, "chunk_size": int, "overlap": int, "mmr_lambda": float}


def _apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    if not overrides:
        return cfg
    unknown = set(overrides) - set(OVERRIDE_FIELDS)
    if unknown:
        raise ValueError(f"unknown override fields: {sorted(unknown)}")
    mapped = dict(overrides)
    if "lambda" in mapped:
        mapped["mmr_lambda"] = mapped.pop("lambda")
    for key, value in mapped.items():
        coerce = _OVERRIDE_COERCE.get(key)
        setattr(cfg, key, coerce(value) if coerce else value)
    if cfg.retrieval not in ("similarity", "mmr"):
        raise ValueError(f"unknown retrieval technique: {cfg.retrieval!r}")
    if not 0.0 <= cfg.mmr_lambda <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    if cfg.chunk_size <= cfg.overlap:
        raise ValueError("chunk_size must exceed overlap")
    return cfg


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    state = ServiceState(config.state_dir, config.runtime)
    app = FastAPI(title="questfill service")
    app.state.store = state

    def get_session(session_id: str) -> Session:
        session = state.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.get("/api/schema")
    def schema() -> dict:
        return {"config_overrides": OVERRIDE_FIELDS, "review_states": REVIEW_STATES}

    @app.get("/api/corpora")
    def list_corpora() -> list[dict]:
        return [{k: v for k, v in c.items() if k != "dir"}
                for c in state.corpora.values()]

    @app.post("/api/corpora")
    async def create_corpus(name: str = Form(...),
                            files: list[UploadFile] = File(...)) -> dict:
        blobs = [(f.filename or "upload.txt", await f.read()) for f in files]
        try:
            return state.create_corpus(name, blobs)
        except QuestfillError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/api/sessions")
    def list_sessions() -> list[dict]:
        return [{"session_id": s.session_id, "corpus_id": s.corpus_id,
                 "config_code": s.config_code, "n_questions": len(s.questionnaire)}
                for s in state.sessions.values()]

    @app.post("/api/sessions")
    def create_session(body: dict) -> dict:
        corpus_id = body.get("corpus_id", "")
        if corpus_id not in state.corpora:
            raise HTTPException(status_code=404, detail="unknown corpus")
        code = body.get("config_code", "SLOC")
        try:
            parse_config_code(code)
        except UnknownCode as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            if body.get("questionnaire_csv"):
                questionnaire = _parse_questionnaire_csv(body["questionnaire_csv"])
            elif body.get("questionnaire"):
                questionnaire = [
                    {"question_id": str(q["question_id"]),
                     "question_text": q["question_text"],
                     "reference_answer": q.get("reference_answer")}
                    for q in body["questionnaire"]]
            else:
                raise ValueError("provide questionnaire or questionnaire_csv")
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=f"malformed questionnaire: {exc}")
        ids = [q["question_id"] for q in questionnaire]
        if len(set(ids)) != len(ids):
            raise HTTPException(status_code=422, detail="duplicate question ids")
        session = Session(session_id=uuid.uuid4().hex[:12], corpus_id=corpus_id,
                          config_code=code, questionnaire=questionnaire)
        for q in questionnaire:
            session.review_state[q["question_id"]] = ReviewEntry()
        state._append_event({"type": "session", "session_id": session.session_id,
                             "session": session.view()})
        return session.view()

    @app.get("/api/sessions/{session_id}")
    def get_session_view(session_id: str) -> dict:
        return get_session(session_id).view()

    @app.post("/api/sessions/{session_id}/questions/{question_id}/generate")
    def generate(session_id: str, question_id: str, body: dict | None = None) -> dict:
        session = get_session(session_id)
        overrides = (body or {}).get("config_overrides") or {}
        with state.session_lock(session_id):
            try:
                record = state.generate_answer(session, question_id, overrides)
            except KeyError:
                raise HTTPException(status_code=404, detail="unknown question")
            except (ValueError, UnknownCode) as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            except QuestfillError as exc:
                raise HTTPException(status_code=502, detail={
                    "error": type(exc).__name__, "message": str(exc)})
        history = session.answers[question_id]
        return {"record": record.to_json(), "revision": len(history) - 1,
                "history_length": len(history)}

    @app.post("/api/sessions/{session_id}/questions/{question_id}/review")
    def review(session_id: str, question_id: str, body: dict) -> dict:
        session = get_session(session_id)
        if question_id not in {q["question_id"] for q in session.questionnaire}:
            raise HTTPException(status_code=404, detail="unknown question")
        new_state = body.get("state")
        if new_state not in REVIEW_STATES:
            raise HTTPException(status_code=422, detail=f"state must be one of {REVIEW_STATES}")
        history = session.answers.get(question_id, [])
        if new_state in ("accepted", "edited", "rejected") and not history:
            raise HTTPException(status_code=409, detail="question has no answer yet")
        if new_state == "edited" and not (body.get("edited_text") or "").strip():
            raise HTTPException(status_code=422, detail="edited state needs edited_text")
        revision = body.get("revision")
        if revision is None:
            revision = len(history) - 1 if history else None
        elif not (0 <= int(revision) < len(history)):
            raise HTTPException(status_code=422, detail="revision out of range")
        with state.session_lock(session_id):
            state._append_event({
                "type": "review", "session_id": session_id, "question_id": question_id,
                "state": new_state, "revision": revision,
                "edited_text": body.get("edited_text") if new_state == "edited" else None,
            })
        return session.review_state[question_id].to_json()

    def _final_answer(session: Session, question_id: str) -> str:
        entry = session.review_state.get(question_id)
        if entry is None or entry.state not in ("accepted", "edited"):
            return ""
        if entry.state == "edited":
            return entry.edited_text or ""
        history = session.answers.get(question_id, [])
        if entry.revision is None or not history:
            return ""
        return history[entry.revision].final_answer

    @app.get("/api/sessions/{session_id}/export")
    def export(session_id: str, format: str = "json"):
        session = get_session(session_id)
        rows = [{"question_id": q["question_id"],
                 "question_text": q["question_text"],
                 "state": session.review_state.get(q["question_id"], ReviewEntry()).state,
                 "answer": _final_answer(session, q["question_id"])}
                for q in session.questionnaire]
        if format == "csv":
            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=["question_id", "question_text",
                                                     "state", "answer"],
                                    lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
            return PlainTextResponse(buf.getvalue(), media_type="text/csv")
        if format != "json":
            raise HTTPException(status_code=422, detail="format must be csv or json")
        return JSONResponse(rows)

    static_dir = config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app


def serve(config: ServiceConfig) -> None:  # pragma: no cover - thin uvicorn wrapper
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
