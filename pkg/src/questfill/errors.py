"""Exception hierarchy shared across the pipeline.

Every questfill-raised error derives from QuestfillError so callers (CLI,
service) can map the whole family to a single exit code / HTTP status.
"""


class QuestfillError(Exception):
    """Base class for all pipeline errors."""


# --- corpus ingestion ---

class UnsupportedFormat(QuestfillError):
    """File extension is not one of the ingestable formats."""


class DecodeError(QuestfillError):
    """File bytes could not be decoded to text, even lossily."""


class EmptyDocument(QuestfillError):
    """File normalized to an empty string."""


# --- vector index ---

class DimensionMismatch(QuestfillError):
    """Vector dimension or model tag conflicts with the index."""


class DuplicateChunkId(QuestfillError):
    """Chunk id already present in the index."""


class EmptyIndex(QuestfillError):
    """Search invoked on an index with no entries."""


class CorruptIndex(QuestfillError):
    """Index file failed checksum or structural validation."""


# --- remote endpoints ---

class EndpointUnreachable(QuestfillError):
    """Network failure persisting after all retries."""


class EmbeddingRefused(QuestfillError):
    """Embedding endpoint returned a 4xx; not retried."""


class GenerationRefused(QuestfillError):
    """Chat endpoint returned a 4xx; not retried."""


# --- prompting / evaluation ---

class ContextOverflow(QuestfillError):
    """Prompt exceeds its character budget even with all context dropped."""


class EmptyInput(QuestfillError):
    """Metric input tokenized/reduced to nothing."""


class JudgeUnparseable(QuestfillError):
    """No judge sample produced a parseable score."""


# --- experiment matrix ---

class UnknownCode(QuestfillError):
    """Configuration code does not match the code grammar."""
