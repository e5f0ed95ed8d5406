from __future__ import annotations

import csv
import os
import sys
from pathlib import Path

import pytest

# the default TBB probe warns on this image; workqueue is always available
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
sys.path.insert(0, str(Path(__file__).parent))  # oracles / mock_endpoints

from questfill import kernels

FIXTURES = Path(__file__).parent / "fixtures"

# Questions with scripted invalid answers (one per invalid reason except
# degenerate, which the placement-degrade harness plants separately).
PLANTED_EMPTY = "q05"
PLANTED_REFUSAL = "q11"
PLANTED_WRONG_LANGUAGE = "q03"


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # JIT compilation happens once here, outside any timed assertion
    kernels.warmup()


def pytest_runtest_logreport(report):
    # acceptance tests print their own PASS line; add the FAIL counterpart
    # so the log always shows one line per criterion
    if report.when == "call" and report.failed and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {name}: FAIL")


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return FIXTURES / "corpus"


@pytest.fixture(scope="session")
def questionnaire_path() -> Path:
    return FIXTURES / "questionnaire.csv"


@pytest.fixture(scope="session")
def questionnaire_rows(questionnaire_path) -> list[dict]:
    with questionnaire_path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="session")
def scripted_answers(questionnaire_rows) -> dict[str, str]:
    """question_text -> deterministic mock reply (reference answer, except
    for the three planted invalid cases)."""
    answers = {}
    for row in questionnaire_rows:
        qid = row["question_id"]
        if qid == PLANTED_EMPTY:
            reply = ""
        elif qid == PLANTED_REFUSAL:
            reply = "I cannot answer this question."
        elif qid == PLANTED_WRONG_LANGUAGE:
            reply = ("The policy requires the report to be filed fast. "
                     "The security team handles it. The deadline is strict.")
        else:
            reply = row["reference_answer"]
        answers[row["question_text"]] = reply
    return answers
