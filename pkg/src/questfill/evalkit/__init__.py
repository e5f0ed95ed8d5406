"""Answer-quality metrics: METEOR, greedy-match BERTScore, judge scoring."""

from .bertscore import BertScoreResult, bertscore, embed_tokens
from .geval import GEVAL_DIMENSIONS, JudgeConfig, geval_score
from .meteor import meteor
from .report import EvalOptions, MetricReport, MetricScores, evaluate_run

__all__ = [
    "BertScoreResult", "bertscore", "embed_tokens",
    "GEVAL_DIMENSIONS", "JudgeConfig", "geval_score",
    "meteor",
    "EvalOptions", "MetricReport", "MetricScores", "evaluate_run",
]
