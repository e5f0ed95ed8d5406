"""Command-line entry points for batch and CI use.

Exit codes: 0 success, 2 usage error (bad arguments, unknown config code),
1 runtime error. Diagnostics go to stderr; data goes to stdout or --out.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from .corpus import IngestOptions, ingest_dir, read_corpus, write_corpus
from .embedder import EmbedderConfig, embed_batch
from .errors import QuestfillError, UnknownCode
from .evalkit import EvalOptions, JudgeConfig, MetricReport, evaluate_run
from .expmatrix import (
    RuntimeConfig,
    compare_reports,
    load_questionnaire,
    parse_config_code,
    run_matrix,
)
from .ragcore import AnswerRecord, PromptSpec, answer_question
from .splitter import SplitConfig, split_corpus, write_chunks
from .vindex import VectorIndex

logger = logging.getLogger(__name__)


def _fail(message: str, code: int = 1) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _add_endpoint_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--llm-url", default="", help="chat completion endpoint base URL")
    parser.add_argument("--embed-url", default="", help="embedding endpoint base URL")
    parser.add_argument("--llama-model", default="llama3")
    parser.add_argument("--mistral-model", default="mistral-instruct")
    parser.add_argument("--embedder", choices=["hashed", "remote"], default="hashed")
    parser.add_argument("--embed-dim", type=int, default=256,
                        help="dimension for the hashed embedder")


def _runtime_from_args(args) -> RuntimeConfig:
    return RuntimeConfig(
        llm_url=args.llm_url,
        embed_url=args.embed_url,
        model_map={"llama_like": args.llama_model, "mistral_like": args.mistral_model},
        embedder_backend=args.embedder,
        embed_dim=args.embed_dim,
        geval=getattr(args, "geval", False),
        judge_url=getattr(args, "judge_url", ""),
        judge_model=getattr(args, "judge_model", ""),
    )


def cmd_ingest(args) -> int:
    options = IngestOptions(
        spreadsheet_mode="separate" if args.excel_separate else "standard")
    docs = ingest_dir(args.source_dir, options)
    if not docs:
        return _fail(f"no ingestable documents under {args.source_dir}")
    manifest = write_corpus(args.out, docs, options)
    print(f"ingested {len(docs)} documents -> {manifest}", file=sys.stderr)
    print(str(manifest))
    return 0


def cmd_index(args) -> int:
    docs = read_corpus(args.corpus_dir)
    cfg = SplitConfig(chunk_size=args.chunk_size, overlap=args.overlap,
                      strategy=args.strategy)
    chunks = split_corpus(docs, cfg)
    if not chunks:
        return _fail("corpus produced no chunks")
    embed_cfg = EmbedderConfig(backend=args.embedder, endpoint_url=args.embed_url,
                               model_name=args.model_name, dim=args.embed_dim)
    vectors = embed_batch([c.text for c in chunks], embed_cfg)
    index = VectorIndex(dim=vectors.shape[1], model_tag=embed_cfg.model_tag)
    index.add(zip(chunks, vectors))
    out = Path(args.out or Path(args.corpus_dir) / "index.qfix")
    index.persist(out)
    write_chunks(out.with_suffix(".chunks.jsonl"), chunks)
    print(f"indexed {len(chunks)} chunks (dim {index.dim}) -> {out}", file=sys.stderr)
    print(str(out))
    return 0


def _query_embedder_for(index: VectorIndex, args) -> EmbedderConfig:
    if index.model_tag.startswith("hashed-trigram-"):
        return EmbedderConfig(backend="hashed", dim=index.dim)
    return EmbedderConfig(backend="remote", endpoint_url=args.embed_url,
                          model_name=index.model_tag)


def cmd_ask(args) -> int:
    cfg = parse_config_code(args.config)
    index = VectorIndex.load(args.index_path)
    embed_cfg = _query_embedder_for(index, args)
    qvec = embed_batch([args.question], embed_cfg)[0]
    retrieved = index.search(qvec, cfg.retrieval_config(), query_echo=args.question)
    from .corpus import detect_language

    language = detect_language(args.question)
    runtime = _runtime_from_args(args)
    record = answer_question(
        "cli", args.question, retrieved=retrieved,
        prompt_spec=PromptSpec.for_language(language, placement=cfg.placement),
        gen_cfg=runtime.generation_config(cfg.model_role),
        config_code=args.config, question_language=language)
    print(record.final_answer)
    cited = ", ".join(h.chunk_id for h in retrieved.hits[:5])
    print(f"[valid={record.valid}"
          + (f" reason={record.invalid_reason}" if record.invalid_reason else "")
          + f"] cited: {cited}", file=sys.stderr)
    return 0


def cmd_run_matrix(args) -> int:
    codes = [c.strip() for c in args.codes.split(",") if c.strip()]
    runtime = _runtime_from_args(args)
    reports = run_matrix(args.corpus_dir, args.questionnaire, codes, runtime,
                         out_dir=args.out, run_id=args.run_id,
                         parallel_configs=args.parallel_configs)
    for report in reports:
        print(f"{report.config_code}: n={report.n} valid_rate={report.valid_rate:.2f}",
              file=sys.stderr)
    print(args.out)
    return 0


def cmd_evaluate(args) -> int:
    run_dir = Path(args.run_dir)
    code_dirs = sorted(d for d in run_dir.iterdir() if (d / "answers.jsonl").exists())
    if not code_dirs:
        return _fail(f"no answer records under {run_dir}")
    options = EvalOptions()
    if args.geval:
        options.judge = JudgeConfig(endpoint_url=args.judge_url or args.llm_url,
                                    model_name=args.judge_model or "judge")
    for code_dir in code_dirs:
        answers = []
        with (code_dir / "answers.jsonl").open(encoding="utf-8") as fh:
            for line in fh:
                answers.append(AnswerRecord.from_json(json.loads(line)))
        references = {}
        if args.questionnaire:
            references = {q.question_id: q.reference_answer
                          for q in load_questionnaire(args.questionnaire)
                          if q.reference_answer}
        report = evaluate_run(answers, references, options,
                              config_code=code_dir.name)
        (code_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
        print(f"{code_dir.name}: n={report.n} valid_rate={report.valid_rate:.2f}",
              file=sys.stderr)
    print(str(run_dir))
    return 0


def cmd_compare(args) -> int:
    reports = [MetricReport.load(p) for p in args.reports]
    table = compare_reports(reports)
    if args.out:
        Path(args.out).write_text(table.to_csv(), encoding="utf-8")
        print(args.out)
    else:
        sys.stdout.write(table.to_csv())
    sys.stderr.write(table.to_text(include_reference=args.show_reference))
    if args.json_out:
        Path(args.json_out).write_text(table.to_json(), encoding="utf-8")
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    config = (ServiceConfig.from_file(args.config) if args.config
              else ServiceConfig())
    config.apply_env()
    serve(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="questfill",
        description="Retrieval-augmented questionnaire answering toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize source files into a corpus directory")
    p.add_argument("source_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--excel-separate", action="store_true",
                   help="one document per spreadsheet row")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="split, embed and index an ingested corpus")
    p.add_argument("corpus_dir")
    p.add_argument("--chunk-size", type=int, default=512)
    p.add_argument("--overlap", type=int, default=0)
    p.add_argument("--strategy", choices=["flat", "recursive"], default="recursive")
    p.add_argument("--embedder", choices=["hashed", "remote"], default="hashed")
    p.add_argument("--embed-url", default="")
    p.add_argument("--embed-dim", type=int, default=256)
    p.add_argument("--model-name", default="")
    p.add_argument("--out", default="")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("ask", help="answer one question against an index")
    p.add_argument("index_path")
    p.add_argument("--question", required=True)
    p.add_argument("--config", default="SLOC", help="configuration code, e.g. SLOC")
    _add_endpoint_args(p)
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("run-matrix", help="run configuration codes over a questionnaire")
    p.add_argument("corpus_dir", help="raw corpus directory (ingested per code)")
    p.add_argument("questionnaire")
    p.add_argument("--codes", required=True, help="comma-separated codes, e.g. SLOB,SLOC")
    p.add_argument("--out", required=True)
    p.add_argument("--run-id", default=None, help="run directory name (default: timestamp)")
    p.add_argument("--parallel-configs", action="store_true",
                   help="run configuration codes concurrently")
    p.add_argument("--geval", action="store_true")
    p.add_argument("--judge-url", default="")
    p.add_argument("--judge-model", default="")
    _add_endpoint_args(p)
    p.set_defaults(func=cmd_run_matrix)

    p = sub.add_parser("evaluate", help="(re)compute metric reports for a finished run")
    p.add_argument("run_dir")
    p.add_argument("--questionnaire", default="",
                   help="questionnaire CSV with reference answers")
    p.add_argument("--geval", action="store_true")
    p.add_argument("--judge-url", default="")
    p.add_argument("--judge-model", default="")
    p.add_argument("--llm-url", default="")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="tabulate metric reports side by side")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", default="", help="write CSV here instead of stdout")
    p.add_argument("--json-out", default="")
    p.add_argument("--show-reference", action="store_true",
                   help="append the published reference table to the text output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="start the review service")
    p.add_argument("--config", default="", help="INI config file (see README)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnknownCode as exc:
        parser.exit(2, f"error: UnknownCode: {exc}\n")
    except QuestfillError as exc:
        return _fail(f"{type(exc).__name__}: {exc}")
    except OSError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
