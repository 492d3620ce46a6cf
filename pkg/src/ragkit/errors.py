"""Exception hierarchy for the toolkit.

Every error raised by ragkit derives from RagError, so callers can catch
one base class at service boundaries and map it to a response code.
"""

from __future__ import annotations


class RagError(Exception):
    """Base class for all toolkit errors."""


# --- ingest ---------------------------------------------------------------

class NotUtf8(RagError):
    """Input bytes do not decode as UTF-8."""


class EmptyDocument(RagError):
    """Document contains no non-whitespace content."""


class WrongFormat(RagError):
    """Operation called on a document of an unsupported format."""


class NoHeader(RagError):
    """CSV input has no records, so no header row."""


class RaggedOverflow(RagError):
    """A CSV row carries more cells than the header."""


class EmptyCorpus(RagError):
    """Corpus-level operation called with zero documents."""


# --- chunking -------------------------------------------------------------

class StructureRequired(RagError):
    """Hierarchical chunking needs a heading structure the document lacks."""


class EmptyTable(RagError):
    """Table has no data rows."""


# --- retrieval ------------------------------------------------------------

class DuplicateChunkId(RagError):
    """Two chunks with the same id were offered for indexing."""


class EmbedderFailure(RagError):
    """Embedding backend failed; message names the offending chunk(s)."""


class UnknownChunk(RagError):
    """chunk_id not present in the index."""


class EmptyQuery(RagError):
    """Query has no index terms and no dense arm is available."""


class MissingEmbedder(RagError):
    """Retrieval mode needs dense vectors but no embedder/index was given."""


class UnresolvableChunk(RagError):
    """Retrieved chunk_id cannot be resolved to a chunk body."""


# --- generation -----------------------------------------------------------

class MissingPlaceholder(RagError):
    """Prompt template body lacks a required placeholder."""


class ProviderTimeout(RagError):
    """Language-model endpoint did not answer within the configured timeout."""


class ProviderError(RagError):
    """Language-model endpoint returned an error response."""

    def __init__(self, status: int, message: str):
        super().__init__(f"provider error {status}: {message}")
        self.status = status
        self.message = message


class EmptyCompletion(RagError):
    """Provider returned a completion with no content."""


# --- evaluation -----------------------------------------------------------

class JudgeFailure(RagError):
    """LM-judged metric could not obtain a judgement."""


class PipelineError(RagError):
    """A query failed inside the pipeline during an evaluation run."""

    def __init__(self, query_id: str, cause: Exception):
        super().__init__(f"query {query_id} failed: {cause}")
        self.query_id = query_id
        self.cause = cause


# --- service --------------------------------------------------------------

class UnknownQuery(RagError):
    """query_id not present in the evaluation run."""


class IllegalTransition(RagError):
    """Requested ticket status change is not allowed by the state machine."""


class UnknownTicket(RagError):
    """ticket_id not found in the ticket store."""


class StorageError(RagError):
    """Persistence failed; no partial state was committed."""


class IndexNotReady(RagError):
    """Query arrived before any index was built."""


class IngestError(RagError):
    """A document failed to load during (re)indexing; the swap is aborted."""

    def __init__(self, doc: str, cause: Exception):
        super().__init__(f"ingest failed for {doc}: {cause}")
        self.doc = doc
        self.cause = cause
