"""Deterministic tokenization shared by chunking, indexing, and metrics.

A token is a maximal run of Unicode letters or digits.  This is
reproducible across platforms and languages, unlike model-specific BPE
vocabularies.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[^\W_]+")


def count_tokens(text: str) -> int:
    """Number of maximal letter/digit runs in `text`."""
    return len(_TOKEN_RE.findall(text))


def token_spans(text: str) -> list[tuple[int, int]]:
    """[start, end) character offsets of each token, in order."""
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def index_terms(text: str) -> list[str]:
    """Lowercased tokens, the unit of sparse indexing and lexical metrics."""
    return [t.lower() for t in _TOKEN_RE.findall(text)]
