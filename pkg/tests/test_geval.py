from __future__ import annotations

import pytest

from mock_endpoints import MockInferenceServer
from questfill.errors import JudgeUnparseable
from questfill.evalkit.geval import (
    GEVAL_DIMENSIONS,
    JudgeConfig,
    geval_score,
    parse_score,
    rubric_template,
)
from questfill.httpclient import InferenceClient


def judge(url, samples=1):
    return JudgeConfig(endpoint_url=url, model_name="judge-model",
                       samples_per_item=samples)


def client(url):
    return InferenceClient(url, backoff_base_s=0.01)


def score_with(chat_fn, samples=1, dimension="faithfulness"):
    with MockInferenceServer(chat_fn=chat_fn) as server:
        return geval_score("Q?", "A.", "ctx", "ref", dimension,
                           judge(server.url, samples), client=client(server.url))


class TestParseScore:
    def test_clean(self):
        assert parse_score("SCORE: 4") == 4.0

    def test_with_reasoning(self):
        assert parse_score("step by step...\nSCORE: 3.5") == 3.5

    def test_last_match_wins(self):
        assert parse_score("SCORE: 2\nrethinking\nSCORE: 4") == 4.0

    def test_missing(self):
        assert parse_score("no score here") is None

    def test_out_of_range_rejected(self):
        assert parse_score("SCORE: 5.5") is None

    def test_decimal_in_range(self):
        assert parse_score("SCORE: 1.25") == 1.25


class TestRubrics:
    def test_templates_exist_for_all_dimensions(self):
        for dimension in GEVAL_DIMENSIONS:
            template = rubric_template(dimension)
            assert "SCORE:" in template
            assert "{question}" in template

    def test_unknown_dimension(self):
        with pytest.raises(ValueError):
            rubric_template("vibes")


class TestGevalScore:
    def test_clean_sample(self):
        assert score_with(lambda p, b: "SCORE: 4") == 4.0

    def test_noisy_two_samples(self):
        value = score_with(lambda p, b: "reasoning first... SCORE: 3.5", samples=2)
        assert value == 3.5

    def test_reask_path(self):
        replies = iter(["I refuse", "SCORE: 2"])
        value = score_with(lambda p, b: next(replies))
        assert value == 2.0

    def test_unparseable_after_reask(self):
        with pytest.raises(JudgeUnparseable):
            score_with(lambda p, b: "never a score")

    def test_out_of_range_treated_as_failure(self):
        replies = iter(["SCORE: 9", "SCORE: 7"])
        with pytest.raises(JudgeUnparseable):
            score_with(lambda p, b: next(replies))

    def test_mean_of_samples(self):
        replies = iter(["SCORE: 2", "SCORE: 4"])
        value = score_with(lambda p, b: next(replies), samples=2)
        assert value == 3.0

    def test_all_scores_in_range(self):
        for reply in ("SCORE: 1", "SCORE: 5", "SCORE: 3.25"):
            value = score_with(lambda p, b: reply)
            assert 1.0 <= value <= 5.0

    def test_prompt_contains_inputs(self):
        prompts = []

        def chat_fn(prompt, body):
            prompts.append(prompt)
            return "SCORE: 3"

        with MockInferenceServer(chat_fn=chat_fn) as server:
            geval_score("the question", "the answer", "the context", "the reference",
                        "faithfulness", judge(server.url), client=client(server.url))
        assert "the question" in prompts[0]
        assert "the answer" in prompts[0]
        assert "the context" in prompts[0]
