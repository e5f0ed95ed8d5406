from __future__ import annotations

import pytest

from conftest import PLANTED_EMPTY, PLANTED_REFUSAL, PLANTED_WRONG_LANGUAGE
from mock_endpoints import MockInferenceServer, scripted_answers_chat_fn
from questfill.errors import UnknownCode
from questfill.expmatrix import (
    REFERENCE_RESULTS,
    STANDARD_CODES,
    RuntimeConfig,
    compare_reports,
    format_config_code,
    load_questionnaire,
    parse_config_code,
    run_matrix,
)
from questfill.evalkit import MetricReport
from questfill.ragcore import PLACEMENT_N, PLACEMENT_O


class TestConfigCodes:
    def test_sloc(self):
        cfg = parse_config_code("SLOC")
        assert (cfg.retrieval, cfg.model_role, cfg.placement, cfg.chunk_size,
                cfg.spreadsheet_mode) == ("similarity", "llama_like", PLACEMENT_O,
                                          512, "standard")

    def test_slobe(self):
        cfg = parse_config_code("SLOBE")
        assert cfg.chunk_size == 150
        assert cfg.spreadsheet_mode == "separate"
        assert cfg.retrieval == "similarity"

    def test_mmnc(self):
        cfg = parse_config_code("MMNC")
        assert (cfg.retrieval, cfg.model_role, cfg.placement, cfg.chunk_size) == (
            "mmr", "mistral_like", PLACEMENT_N, 512)

    def test_all_standard_codes_decode(self):
        # full attribute tuples for the ten standard codes
        expected = {
            "SLOBE": ("similarity", "llama_like", PLACEMENT_O, 150, "separate"),
            "SLOB": ("similarity", "llama_like", PLACEMENT_O, 150, "standard"),
            "SLNC": ("similarity", "llama_like", PLACEMENT_N, 512, "standard"),
            "SMNC": ("similarity", "mistral_like", PLACEMENT_N, 512, "standard"),
            "MLNC": ("mmr", "llama_like", PLACEMENT_N, 512, "standard"),
            "MMNC": ("mmr", "mistral_like", PLACEMENT_N, 512, "standard"),
            "SLOC": ("similarity", "llama_like", PLACEMENT_O, 512, "standard"),
            "SMOC": ("similarity", "mistral_like", PLACEMENT_O, 512, "standard"),
            "MLOC": ("mmr", "llama_like", PLACEMENT_O, 512, "standard"),
            "MMOC": ("mmr", "mistral_like", PLACEMENT_O, 512, "standard"),
        }
        for code, attrs in expected.items():
            cfg = parse_config_code(code)
            assert (cfg.retrieval, cfg.model_role, cfg.placement, cfg.chunk_size,
                    cfg.spreadsheet_mode) == attrs, code

    def test_round_trip_all_codes(self):
        for code in STANDARD_CODES:
            assert format_config_code(parse_config_code(code)) == code

    @pytest.mark.parametrize("bad", ["", "BOGUS", "XLOC", "SLOX", "sloc",
                                     "SLOCE2", "SLO", "SLOCX"])
    def test_unknown_codes_rejected(self, bad):
        with pytest.raises(UnknownCode):
            parse_config_code(bad)

    def test_reference_table_covers_standard_codes(self):
        assert set(REFERENCE_RESULTS) == set(STANDARD_CODES)


class TestQuestionnaire:
    def test_csv_loading(self, questionnaire_path):
        questions = load_questionnaire(questionnaire_path)
        assert len(questions) == 20
        assert questions[0].question_id == "q01"
        assert questions[0].reference_answer

    def test_jsonl_loading(self, tmp_path):
        path = tmp_path / "q.jsonl"
        path.write_text('{"question_id": "a", "question_text": "Q?"}\n')
        questions = load_questionnaire(path)
        assert questions[0].question_id == "a"
        assert questions[0].reference_answer is None


@pytest.fixture
def scripted_server(scripted_answers):
    with MockInferenceServer(chat_fn=scripted_answers_chat_fn(scripted_answers)) as s:
        yield s


class TestRunMatrix:
    def runtime(self, server):
        return RuntimeConfig(llm_url=server.url, embedder_backend="hashed",
                             embed_dim=64)

    def test_single_code_run(self, corpus_dir, questionnaire_path, scripted_server,
                             tmp_path):
        reports = run_matrix(corpus_dir, questionnaire_path, ["SLOB"],
                             self.runtime(scripted_server), out_dir=tmp_path,
                             run_id="r1")
        assert len(reports) == 1
        report = reports[0]
        assert report.n == 20
        # planted invalids: empty, refusal, wrong-language -> 17/20
        assert report.valid_rate == pytest.approx(0.85)
        reasons = {r["question_id"]: r["invalid_reason"] for r in report.per_record}
        assert reasons[PLANTED_EMPTY] == "empty"
        assert reasons[PLANTED_REFUSAL] == "refusal"
        assert reasons[PLANTED_WRONG_LANGUAGE] == "wrong_language"
        assert (tmp_path / "r1" / "SLOB" / "report.json").exists()
        assert (tmp_path / "r1" / "SLOB" / "answers.jsonl").exists()

    def test_unknown_code_aborts_before_work(self, corpus_dir, questionnaire_path,
                                             scripted_server, tmp_path):
        with pytest.raises(UnknownCode):
            run_matrix(corpus_dir, questionnaire_path, ["BOGUS"],
                       self.runtime(scripted_server), out_dir=tmp_path)

    def test_determinism_across_runs(self, corpus_dir, questionnaire_path,
                                     scripted_server, tmp_path):
        runtime = self.runtime(scripted_server)
        first = run_matrix(corpus_dir, questionnaire_path, ["SLOB", "MMOC"],
                           runtime, out_dir=tmp_path, run_id="a")
        second = run_matrix(corpus_dir, questionnaire_path, ["SLOB", "MMOC"],
                            runtime, out_dir=tmp_path, run_id="b")
        for r1, r2 in zip(first, second):
            assert r1.to_json() == r2.to_json()
        a = (tmp_path / "a" / "SLOB" / "report.json").read_bytes()
        b = (tmp_path / "b" / "SLOB" / "report.json").read_bytes()
        assert a == b

    def test_failed_code_yields_stub_report(self, questionnaire_path, scripted_server,
                                            tmp_path):
        empty_corpus = tmp_path / "empty"
        empty_corpus.mkdir()
        reports = run_matrix(empty_corpus, questionnaire_path, ["SLOB"],
                             self.runtime(scripted_server))
        assert len(reports) == 1
        assert reports[0].n == 0
        assert reports[0].warnings

    def test_parallel_configs_match_sequential(self, corpus_dir, questionnaire_path,
                                               scripted_server, tmp_path):
        runtime = self.runtime(scripted_server)
        sequential = run_matrix(corpus_dir, questionnaire_path, ["SLOB", "SLOC"],
                                runtime, out_dir=tmp_path, run_id="seq")
        parallel = run_matrix(corpus_dir, questionnaire_path, ["SLOB", "SLOC"],
                              runtime, out_dir=tmp_path, run_id="par",
                              parallel_configs=True)
        assert [r.config_code for r in parallel] == ["SLOB", "SLOC"]
        for a, b in zip(sequential, parallel):
            assert a.to_json() == b.to_json()

    def test_single_worker_matches_pool(self, corpus_dir, questionnaire_path,
                                        scripted_server):
        pooled = run_matrix(corpus_dir, questionnaire_path, ["SLOB"],
                            self.runtime(scripted_server))
        serial_runtime = self.runtime(scripted_server)
        serial_runtime.workers = 1
        serial = run_matrix(corpus_dir, questionnaire_path, ["SLOB"], serial_runtime)
        assert pooled[0].to_json() == serial[0].to_json()


class TestCompareReports:
    def make_report(self, code, valid_rate, meteor=0.5):
        return MetricReport(config_code=code, n=10, valid_rate=valid_rate,
                            meteor_mean=meteor, bert_p_mean=0.7, bert_r_mean=0.6,
                            bert_f1_mean=0.65, geval=None, per_record=[])

    def test_single_report_single_row(self):
        table = compare_reports([self.make_report("SLOB", 0.9)])
        assert len(table.rows) == 1
        assert table.rows[0]["code"] == "SLOB"
        csv_lines = table.to_csv().strip().splitlines()
        assert len(csv_lines) == 2

    def test_best_flagged(self):
        table = compare_reports([self.make_report("SLOB", 0.9),
                                 self.make_report("SLNC", 0.6)])
        assert table.best["valid_rate"] == "SLOB"
        assert "*" in table.to_text()

    def test_csv_column_order(self):
        table = compare_reports([self.make_report("SLOB", 0.9)])
        header = table.to_csv().splitlines()[0]
        assert header == ("code,valid_rate,meteor,bert_p,bert_r,bert_f1,"
                          "geval_cp,geval_cr,geval_faith,geval_rel")

    def test_reference_block_labeled(self):
        table = compare_reports([self.make_report("SLOB", 0.9)])
        text = table.to_text(include_reference=True)
        assert "reference results" in text
        assert "not expectations" in text
