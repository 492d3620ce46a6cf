"""Segment documents into retrievable chunks.

Five strategies: whole_doc (one chunk per document), fixed token windows
with optional overlap, recursive paragraph/sentence splitting under a
token budget, hierarchical one-chunk-per-section, and table_row for
tabular sources.  auto_strategy picks one per document from its size and
shape.  All splitting is deterministic: same input and config, same bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import EmptyDocument, EmptyTable, StructureRequired
from .ingest import (
    CorpusStats,
    DocFormat,
    DocumentTree,
    SourceDocument,
    TableDocument,
    Unstructured,
    parse_structure,
)
from .tokens import count_tokens, token_spans

_PARAGRAPH_SEP_RE = re.compile(r"\n[ \t]*\n+")
_SENTENCE_END_RE = re.compile(r"[.!?\n]+")


class Strategy(str, Enum):
    WHOLE_DOC = "whole_doc"
    FIXED = "fixed"
    RECURSIVE = "recursive"
    HIERARCHICAL = "hierarchical"
    TABLE_ROW = "table_row"


@dataclass(frozen=True)
class ChunkingConfig:
    """Strategy plus its parameters.

    size_tokens/overlap_tokens apply to fixed; max_tokens to recursive and
    hierarchical; short_doc_threshold_tokens feeds auto_strategy.
    """

    strategy: Strategy
    size_tokens: int = 1000
    overlap_tokens: int = 0
    max_tokens: int = 1000
    short_doc_threshold_tokens: int = 1000

    def __post_init__(self):
        if self.strategy == Strategy.FIXED:
            if not 0 <= self.overlap_tokens < self.size_tokens:
                raise ValueError(
                    f"need 0 <= overlap ({self.overlap_tokens}) < size ({self.size_tokens})"
                )
        if self.strategy in (Strategy.RECURSIVE, Strategy.HIERARCHICAL) and self.max_tokens < 16:
            raise ValueError(f"max_tokens must be >= 16, got {self.max_tokens}")


@dataclass(frozen=True)
class Chunk:
    """A retrievable text unit with provenance back to its document."""

    chunk_id: str
    doc_id: str
    text: str
    token_count: int
    section_path: tuple[str, ...] = ()
    char_span: tuple[int, int] | None = None


def _make_chunk(
    doc_id: str,
    ordinal: int,
    text: str,
    section_path: tuple[str, ...] = (),
    char_span: tuple[int, int] | None = None,
) -> Chunk:
    return Chunk(
        chunk_id=f"{doc_id}#{ordinal}",
        doc_id=doc_id,
        text=text,
        token_count=count_tokens(text),
        section_path=section_path,
        char_span=char_span,
    )


# ---------------------------------------------------------------------------
# Span splitters (all operate on [start, end) offsets into one raw text)
# ---------------------------------------------------------------------------

def _window_spans(text: str, start: int, end: int, size: int, overlap: int) -> list[tuple[int, int]]:
    """Fixed token windows over text[start:end], anchored on token boundaries."""
    spans = token_spans(text[start:end])
    if not spans:
        return []
    step = size - overlap
    out = []
    i = 0
    while True:
        j = min(i + size, len(spans))
        out.append((start + spans[i][0], start + spans[j - 1][1]))
        if j == len(spans):
            break
        i += step
    return out


def _sentence_spans(text: str, start: int, end: int) -> list[tuple[int, int]]:
    """Split text[start:end] after each run of sentence terminators."""
    piece = text[start:end]
    cuts = [m.end() for m in _SENTENCE_END_RE.finditer(piece)]
    if not cuts or cuts[-1] != len(piece):
        cuts.append(len(piece))
    out = []
    prev = 0
    for cut in cuts:
        if cut > prev:
            out.append((start + prev, start + cut))
        prev = cut
    return out


def _recursive_spans(text: str, start: int, end: int, max_tokens: int) -> list[tuple[int, int]]:
    """Paragraphs, then sentences packed up to max_tokens, then fixed windows."""
    if count_tokens(text[start:end]) <= max_tokens:
        return [(start, end)]

    out: list[tuple[int, int]] = []
    for p_start, p_end in _split_paragraphs(text, start, end):
        if count_tokens(text[p_start:p_end]) <= max_tokens:
            out.append((p_start, p_end))
            continue
        # Pack consecutive sentences while the budget holds.
        run_start: int | None = None
        run_tokens = 0
        for s_start, s_end in _sentence_spans(text, p_start, p_end):
            n = count_tokens(text[s_start:s_end])
            if n > max_tokens:
                if run_start is not None:
                    out.append((run_start, s_start))
                    run_start, run_tokens = None, 0
                out.extend(_window_spans(text, s_start, s_end, max_tokens, 0))
                continue
            if run_start is None:
                run_start, run_tokens = s_start, n
            elif run_tokens + n <= max_tokens:
                run_tokens += n
            else:
                out.append((run_start, s_start))
                run_start, run_tokens = s_start, n
        if run_start is not None:
            out.append((run_start, p_end))
    return out


def _split_paragraphs(text: str, start: int, end: int) -> list[tuple[int, int]]:
    piece = text[start:end]
    out = []
    prev = 0
    for m in _PARAGRAPH_SEP_RE.finditer(piece):
        if m.start() > prev:
            out.append((start + prev, start + m.start()))
        prev = m.end()
    if prev < len(piece):
        out.append((start + prev, start + len(piece)))
    return out


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------

def chunk_document(
    doc: SourceDocument,
    cfg: ChunkingConfig,
    structure: DocumentTree | Unstructured | None = None,
) -> list[Chunk]:
    """Chunk one text document under whole_doc/fixed/recursive/hierarchical.

    Hierarchical uses the given structure (parsed on demand otherwise) and
    emits one chunk per section, heading line prepended; oversized sections
    are recursively split with the section_path retained.  Pieces without
    any index term are dropped so every chunk is retrievable.
    """
    if cfg.strategy == Strategy.TABLE_ROW:
        raise ValueError("use chunk_table for table_row strategy")
    if not doc.raw_text.strip():
        raise EmptyDocument(doc.doc_id)

    text = doc.raw_text
    if cfg.strategy == Strategy.WHOLE_DOC:
        return [_make_chunk(doc.doc_id, 0, text, (), (0, len(text)))]

    if cfg.strategy == Strategy.FIXED:
        spans = _window_spans(text, 0, len(text), cfg.size_tokens, cfg.overlap_tokens)
        return [
            _make_chunk(doc.doc_id, i, text[s:e], (), (s, e)) for i, (s, e) in enumerate(spans)
        ]

    if cfg.strategy == Strategy.RECURSIVE:
        spans = [
            (s, e)
            for (s, e) in _recursive_spans(text, 0, len(text), cfg.max_tokens)
            if count_tokens(text[s:e]) > 0
        ]
        return [
            _make_chunk(doc.doc_id, i, text[s:e], (), (s, e)) for i, (s, e) in enumerate(spans)
        ]

    # hierarchical
    tree = structure if structure is not None else parse_structure(doc)
    if not isinstance(tree, DocumentTree):
        raise StructureRequired(doc.doc_id)
    pieces: list[tuple[tuple[int, int], tuple[str, ...]]] = []
    if count_tokens(tree.preamble) > 0:
        pieces.append(((0, len(tree.preamble)), ()))
    for node, path in tree.walk():
        has_body = count_tokens(node.body_text) > 0
        if not has_body and node.children:
            continue
        section_span = (node.head_span[0], node.body_span[1])
        pieces.append((section_span, path))

    chunks = []
    ordinal = 0
    for (s, e), path in pieces:
        if count_tokens(text[s:e]) <= cfg.max_tokens:
            sub_spans = [(s, e)]
        else:
            sub_spans = _recursive_spans(text, s, e, cfg.max_tokens)
        for sub_s, sub_e in sub_spans:
            if count_tokens(text[sub_s:sub_e]) == 0:
                continue
            chunks.append(_make_chunk(doc.doc_id, ordinal, text[sub_s:sub_e], path, (sub_s, sub_e)))
            ordinal += 1
    return chunks


def chunk_table(table: TableDocument, cfg: ChunkingConfig) -> list[Chunk]:
    """One chunk per data row, each cell prefixed with its column header.

    Empty cells are skipped; all-empty rows produce no chunk.
    """
    if cfg.strategy != Strategy.TABLE_ROW:
        raise ValueError(f"chunk_table needs strategy=table_row, got {cfg.strategy.value}")
    if not table.rows:
        raise EmptyTable(table.doc_id)
    chunks = []
    ordinal = 0
    for row in table.rows:
        parts = [f"{h}: {c}" for h, c in zip(table.headers, row) if c != ""]
        if not parts:
            continue
        chunks.append(_make_chunk(table.doc_id, ordinal, "; ".join(parts)))
        ordinal += 1
    return chunks


def auto_strategy(
    doc: SourceDocument,
    structure: DocumentTree | Unstructured | None,
    stats: CorpusStats,
    short_doc_threshold_tokens: int = 1000,
    max_tokens: int = 1000,
) -> ChunkingConfig:
    """Pick a chunking strategy from document size and shape.

    Short documents stay whole; tables become one chunk per row; documents
    with a heading outline follow it; everything else is split recursively.
    """
    entry = stats.for_doc(doc.doc_id)
    if entry.token_count <= short_doc_threshold_tokens:
        return ChunkingConfig(
            Strategy.WHOLE_DOC, short_doc_threshold_tokens=short_doc_threshold_tokens
        )
    if doc.format == DocFormat.CSV_TABLE:
        return ChunkingConfig(
            Strategy.TABLE_ROW, short_doc_threshold_tokens=short_doc_threshold_tokens
        )
    if isinstance(structure, DocumentTree):
        return ChunkingConfig(
            Strategy.HIERARCHICAL,
            max_tokens=max_tokens,
            short_doc_threshold_tokens=short_doc_threshold_tokens,
        )
    return ChunkingConfig(
        Strategy.RECURSIVE,
        max_tokens=max_tokens,
        short_doc_threshold_tokens=short_doc_threshold_tokens,
    )
