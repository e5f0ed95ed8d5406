"""questfill: retrieval-augmented questionnaire answering over policy corpora.

Pipeline: ingest (corpus) -> split (splitter) -> embed (embedder) -> index
(vindex) -> retrieve + generate + postprocess (ragcore) -> score (evalkit),
orchestrated per configuration code by expmatrix, with a review service and
CLI on top. Numeric hot paths live in kernels (numba with numpy fallback,
QF_KERNELS selects the lane).
"""

__version__ = "0.1.0"
