from __future__ import annotations

import json
import subprocess
import sys

import pytest

from mock_endpoints import MockInferenceServer, scripted_answers_chat_fn
from questfill.cli import main


@pytest.fixture
def corpus_out(tmp_path, corpus_dir):
    out = tmp_path / "corpus"
    assert main(["ingest", str(corpus_dir), "--out", str(out)]) == 0
    return out


class TestIngest:
    def test_creates_manifest_and_docs(self, corpus_out):
        assert (corpus_out / "manifest.json").exists()
        assert (corpus_out / "docs.jsonl").exists()

    def test_excel_separate_changes_doc_count(self, tmp_path, corpus_dir):
        standard = tmp_path / "std"
        separate = tmp_path / "sep"
        main(["ingest", str(corpus_dir), "--out", str(standard)])
        main(["ingest", str(corpus_dir), "--out", str(separate), "--excel-separate"])
        n_std = len(json.loads((standard / "manifest.json").read_text())["documents"])
        n_sep = len(json.loads((separate / "manifest.json").read_text())["documents"])
        assert n_sep == n_std + 6  # 7 CSV rows replace the single sheet document

    def test_missing_dir_fails(self, tmp_path, capsys):
        assert main(["ingest", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == 1
        assert "error" in capsys.readouterr().err


class TestIndex:
    def test_builds_index_and_chunks(self, corpus_out, capsys):
        rc = main(["index", str(corpus_out), "--chunk-size", "150",
                   "--overlap", "0", "--strategy", "recursive",
                   "--embedder", "hashed", "--embed-dim", "64"])
        assert rc == 0
        out_path = capsys.readouterr().out.strip()
        assert out_path.endswith("index.qfix")
        from questfill.vindex import VectorIndex
        index = VectorIndex.load(out_path)
        assert len(index) > 10
        assert index.model_tag == "hashed-trigram-64"


class TestAsk:
    def test_deterministic_answer(self, corpus_out, capsys):
        main(["index", str(corpus_out), "--embedder", "hashed",
              "--embed-dim", "64"])
        capsys.readouterr()  # drop the index command's output
        index_path = str(corpus_out / "index.qfix")
        answers = {"Wie oft müssen Passwörter geändert werden?":
                   "Passwörter müssen alle 90 Tage geändert werden."}
        with MockInferenceServer(chat_fn=scripted_answers_chat_fn(answers)) as server:
            args = ["ask", index_path,
                    "--question", "Wie oft müssen Passwörter geändert werden?",
                    "--config", "SLOC", "--llm-url", server.url]
            assert main(args) == 0
            first = capsys.readouterr().out
            assert main(args) == 0
            second = capsys.readouterr().out
        assert first == second
        assert "90 Tage" in first

    def test_unknown_code_exits_2(self, corpus_out, capsys):
        main(["index", str(corpus_out), "--embedder", "hashed", "--embed-dim", "64"])
        capsys.readouterr()
        with pytest.raises(SystemExit) as exc:
            main(["ask", str(corpus_out / "index.qfix"), "--question", "Q?",
                  "--config", "BOGUS"])
        assert exc.value.code == 2
        assert "UnknownCode" in capsys.readouterr().err


class TestRunMatrixAndCompare:
    def test_run_then_compare(self, tmp_path, corpus_dir, questionnaire_path,
                              scripted_answers, capsys):
        runs = tmp_path / "runs"
        with MockInferenceServer(
                chat_fn=scripted_answers_chat_fn(scripted_answers)) as server:
            rc = main(["run-matrix", str(corpus_dir), str(questionnaire_path),
                       "--codes", "SLOB,SLOC", "--out", str(runs),
                       "--run-id", "t1", "--llm-url", server.url,
                       "--embedder", "hashed", "--embed-dim", "64"])
        assert rc == 0
        capsys.readouterr()
        report_paths = sorted((runs / "t1").glob("*/report.json"))
        assert len(report_paths) == 2
        table_csv = tmp_path / "table.csv"
        rc = main(["compare"] + [str(p) for p in report_paths]
                  + ["--out", str(table_csv)])
        assert rc == 0
        lines = table_csv.read_text().strip().splitlines()
        assert lines[0].startswith("code,valid_rate,meteor")
        assert len(lines) == 3  # header + two codes

    def test_unknown_code_exits_2(self, tmp_path, corpus_dir, questionnaire_path,
                                  capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run-matrix", str(corpus_dir), str(questionnaire_path),
                  "--codes", "BOGUS", "--out", str(tmp_path / "runs")])
        assert exc.value.code == 2
        assert "UnknownCode" in capsys.readouterr().err

    def test_compare_single_report(self, tmp_path, capsys):
        from questfill.evalkit import MetricReport
        report = MetricReport(config_code="SLOB", n=5, valid_rate=0.8,
                              meteor_mean=0.3, bert_p_mean=0.7, bert_r_mean=0.6,
                              bert_f1_mean=0.65, geval=None, per_record=[])
        path = tmp_path / "r.json"
        path.write_text(report.to_json())
        assert main(["compare", str(path)]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[1].startswith("SLOB,")


class TestEvaluate:
    def test_recomputes_reports(self, tmp_path, corpus_dir, questionnaire_path,
                                scripted_answers, capsys):
        runs = tmp_path / "runs"
        with MockInferenceServer(
                chat_fn=scripted_answers_chat_fn(scripted_answers)) as server:
            main(["run-matrix", str(corpus_dir), str(questionnaire_path),
                  "--codes", "SLOB", "--out", str(runs), "--run-id", "t1",
                  "--llm-url", server.url, "--embedder", "hashed",
                  "--embed-dim", "64"])
        capsys.readouterr()
        report_file = runs / "t1" / "SLOB" / "report.json"
        before = report_file.read_text()
        rc = main(["evaluate", str(runs / "t1"),
                   "--questionnaire", str(questionnaire_path)])
        assert rc == 0
        assert report_file.read_text() == before  # same inputs, same report


class TestUsageErrors:
    def test_no_command_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_module_execution_smoke(self):
        # module execution path used by scripts/CI
        proc = subprocess.run([sys.executable, "-m", "questfill", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "run-matrix" in proc.stdout
