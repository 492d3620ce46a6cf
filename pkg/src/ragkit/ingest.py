"""Load heterogeneous source files into a normalized document model.

Three input shapes are supported: plain text, markdown with ATX headings,
and CSV tables (header row first).  Office formats are expected to be
exported to one of these before ingestion; merged-cell spreadsheets in
particular need a manual rewrite to prose or clean CSV.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import (
    EmptyCorpus,
    EmptyDocument,
    NoHeader,
    NotUtf8,
    RaggedOverflow,
    WrongFormat,
)
from .tokens import count_tokens


class DocFormat(str, Enum):
    PLAIN_TEXT = "plain_text"
    MARKDOWN = "markdown"
    CSV_TABLE = "csv_table"


_EXTENSION_FORMATS = {
    ".md": DocFormat.MARKDOWN,
    ".markdown": DocFormat.MARKDOWN,
    ".csv": DocFormat.CSV_TABLE,
}

_HEADING_RE = re.compile(r"^(#{1,6})[ \t]+(.*)$")


@dataclass(frozen=True)
class SourceDocument:
    """A normalized input document with its raw UTF-8 text."""

    doc_id: str
    title: str
    format: DocFormat
    raw_text: str
    byte_size: int


@dataclass
class TreeNode:
    """One section of a heading-structured document.

    head_span covers the heading line including its newline; body_span
    covers the contiguous non-heading text between this heading and the
    next heading of any level.
    """

    heading: str
    level: int
    body_text: str
    children: list["TreeNode"] = field(default_factory=list)
    head_span: tuple[int, int] = (0, 0)
    body_span: tuple[int, int] = (0, 0)


@dataclass
class DocumentTree:
    """Heading outline of a markdown/plain document.

    `preamble` holds any text before the first heading so that the
    concatenation of preamble + all body_text reproduces the document's
    non-heading text exactly.
    """

    doc_id: str
    preamble: str
    nodes: list[TreeNode]

    def walk(self):
        """Yield (node, path-of-heading-strings) in document order."""
        stack = [(n, (n.heading,)) for n in reversed(self.nodes)]
        while stack:
            node, path = stack.pop()
            yield node, path
            for child in reversed(node.children):
                stack.append((child, path + (child.heading,)))


@dataclass(frozen=True)
class Unstructured:
    """Marker result: the document has no heading structure."""

    doc_id: str


@dataclass(frozen=True)
class TableDocument:
    doc_id: str
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class DocStats:
    doc_id: str
    token_count: int
    structured: bool


@dataclass(frozen=True)
class CorpusStats:
    per_document: tuple[DocStats, ...]
    total_tokens: int

    def for_doc(self, doc_id: str) -> DocStats:
        for entry in self.per_document:
            if entry.doc_id == doc_id:
                return entry
        raise KeyError(doc_id)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def load_document(
    path_or_bytes: str | Path | bytes,
    format_hint: DocFormat | str | None = None,
    doc_id: str | None = None,
    title: str | None = None,
) -> SourceDocument:
    """Read a file (or raw bytes) into a SourceDocument.

    Format comes from the hint, else the file extension, else plain_text.
    A UTF-8 BOM is stripped.  Raises NotUtf8 on undecodable bytes and
    EmptyDocument when the content is all whitespace.
    """
    if isinstance(path_or_bytes, bytes):
        data = path_or_bytes
        source_name = doc_id or "doc"
    else:
        path = Path(path_or_bytes)
        data = path.read_bytes()
        source_name = path.stem
        if format_hint is None:
            format_hint = _EXTENSION_FORMATS.get(path.suffix.lower())

    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise NotUtf8(f"{source_name}: {exc}") from exc
    if text.startswith("﻿"):
        text = text[1:]
    if not text.strip():
        raise EmptyDocument(source_name)

    fmt = DocFormat(format_hint) if format_hint is not None else DocFormat.PLAIN_TEXT
    resolved_id = doc_id or source_name
    return SourceDocument(
        doc_id=resolved_id,
        title=title or resolved_id,
        format=fmt,
        raw_text=text,
        byte_size=len(data),
    )


def load_manifest(manifest_path: str | Path) -> list[SourceDocument]:
    """Load a corpus manifest: a JSON array of {path, doc_id?, title?, format?}.

    Paths are resolved relative to the manifest file's directory.
    """
    manifest_path = Path(manifest_path)
    entries = json.loads(manifest_path.read_text(encoding="utf-8"))
    if not isinstance(entries, list):
        raise ValueError("manifest must be a JSON array")
    docs: list[SourceDocument] = []
    seen: set[str] = set()
    for entry in entries:
        path = manifest_path.parent / entry["path"]
        doc = load_document(
            path,
            format_hint=entry.get("format"),
            doc_id=entry.get("doc_id"),
            title=entry.get("title"),
        )
        if doc.doc_id in seen:
            raise ValueError(f"duplicate doc_id in manifest: {doc.doc_id}")
        seen.add(doc.doc_id)
        docs.append(doc)
    return docs


# ---------------------------------------------------------------------------
# Structure parsing
# ---------------------------------------------------------------------------

def parse_structure(doc: SourceDocument) -> DocumentTree | Unstructured:
    """Build the heading outline of a markdown/plain document.

    ATX headings (1-6 '#' then whitespace) open sections.  A heading whose
    level is <= its would-be parent is promoted to sibling of the nearest
    ancestor with a smaller level (or to root), so levels strictly increase
    along every root-to-leaf path and no real document is rejected.
    Returns Unstructured when the document has no heading at all.
    """
    if doc.format == DocFormat.CSV_TABLE:
        raise WrongFormat(f"{doc.doc_id}: cannot parse headings in a csv_table")

    text = doc.raw_text
    nodes: list[TreeNode] = []
    stack: list[TreeNode] = []
    preamble_end: int | None = None
    open_node: TreeNode | None = None
    offset = 0

    for line in text.splitlines(keepends=True):
        line_end = offset + len(line)
        match = _HEADING_RE.match(line.rstrip("\n"))
        if match:
            if preamble_end is None:
                preamble_end = offset
            if open_node is not None:
                open_node.body_span = (open_node.body_span[0], offset)
            level = len(match.group(1))
            node = TreeNode(
                heading=match.group(2).strip(),
                level=level,
                body_text="",
                head_span=(offset, line_end),
                body_span=(line_end, line_end),
            )
            while stack and stack[-1].level >= level:
                stack.pop()
            if stack:
                stack[-1].children.append(node)
            else:
                nodes.append(node)
            stack.append(node)
            open_node = node
        offset = line_end

    if not nodes:
        return Unstructured(doc.doc_id)
    if open_node is not None:
        open_node.body_span = (open_node.body_span[0], len(text))

    tree = DocumentTree(doc_id=doc.doc_id, preamble=text[:preamble_end], nodes=nodes)
    for node, _ in tree.walk():
        node.body_text = text[node.body_span[0] : node.body_span[1]]
    return tree


def parse_table(doc: SourceDocument) -> TableDocument:
    """Parse a csv_table document; first record is the header row.

    Short rows are padded with empty cells; rows longer than the header
    raise RaggedOverflow (truncation would lose data).
    """
    if doc.format != DocFormat.CSV_TABLE:
        raise WrongFormat(f"{doc.doc_id}: parse_table needs format=csv_table")
    records = list(csv.reader(io.StringIO(doc.raw_text)))
    if not records:
        raise NoHeader(doc.doc_id)
    headers = tuple(records[0])
    width = len(headers)
    rows = []
    for i, rec in enumerate(records[1:], start=1):
        if len(rec) > width:
            raise RaggedOverflow(f"{doc.doc_id}: row {i} has {len(rec)} cells, header has {width}")
        rows.append(tuple(rec) + ("",) * (width - len(rec)))
    return TableDocument(doc_id=doc.doc_id, headers=headers, rows=tuple(rows))


def corpus_stats(corpus: list[SourceDocument]) -> CorpusStats:
    """Token counts and structured flags for a corpus.

    Tables count as unstructured here; their shape is handled by the
    table-row chunking path, not the heading outline.
    """
    if not corpus:
        raise EmptyCorpus("corpus_stats needs at least one document")
    per_doc = []
    for doc in corpus:
        if doc.format == DocFormat.CSV_TABLE:
            structured = False
        else:
            structured = isinstance(parse_structure(doc), DocumentTree)
        per_doc.append(DocStats(doc.doc_id, count_tokens(doc.raw_text), structured))
    return CorpusStats(tuple(per_doc), sum(d.token_count for d in per_doc))
