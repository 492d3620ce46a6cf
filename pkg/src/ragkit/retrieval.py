"""Sparse (BM25), dense, and hybrid retrieval over a chunk set.

The sparse arm is an Okapi BM25 inverted index over lowercased
alphanumeric-run terms.  The dense arm is an exhaustive cosine scan over
L2-normalized vectors: exact, and fast enough at the corpus scales this
toolkit targets (tens of thousands of tokens).  Hybrid mode takes the
union of both arms' top-k, interleaved by rank.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import requests

from .chunking import Chunk
from .errors import (
    DuplicateChunkId,
    EmbedderFailure,
    EmptyQuery,
    MissingEmbedder,
    UnknownChunk,
    UnresolvableChunk,
)
from .tokens import index_terms


class Mode(str, Enum):
    DENSE_ONLY = "dense_only"
    SPARSE_ONLY = "sparse_only"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class RetrievalConfig:
    mode: Mode = Mode.HYBRID
    k_dense: int = 3
    k_sparse: int = 3
    context_budget_tokens: int = 3000

    def __post_init__(self):
        if self.mode in (Mode.DENSE_ONLY, Mode.HYBRID) and self.k_dense < 1:
            raise ValueError("k_dense must be >= 1")
        if self.mode in (Mode.SPARSE_ONLY, Mode.HYBRID) and self.k_sparse < 1:
            raise ValueError("k_sparse must be >= 1")
        if self.context_budget_tokens < 1:
            raise ValueError("context_budget_tokens must be >= 1")


# ---------------------------------------------------------------------------
# Embedders
# ---------------------------------------------------------------------------

class HashEmbedder:
    """Deterministic bag-of-terms embedder for offline use and tests.

    Each term's stable 64-bit hash picks a bucket (h mod d) and a sign
    (bit 6 of h); signed term counts are summed and L2-normalized.  Texts
    without index terms map to the zero vector.
    """

    embedder_id = "hash64-v1"
    d = 64

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.d), dtype=np.float64)
        for i, text in enumerate(texts):
            for term in index_terms(text):
                h = int.from_bytes(
                    hashlib.blake2b(term.encode("utf-8"), digest_size=8).digest(), "big"
                )
                sign = 1.0 if (h >> 6) & 1 else -1.0
                out[i, h % self.d] += sign
            norm = np.linalg.norm(out[i])
            if norm > 0:
                out[i] /= norm
        return out


_DEFAULT_HASH_EMBEDDER = HashEmbedder()


def hash_embed(text: str) -> np.ndarray:
    """Embed one text with the built-in deterministic hash embedder."""
    return _DEFAULT_HASH_EMBEDDER.embed([text])[0]


class RemoteEmbedder:
    """HTTP embedder: POST {texts: [...]} -> {vectors: [[...]]}."""

    def __init__(self, endpoint: str, d: int, embedder_id: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.d = d
        self.embedder_id = embedder_id or f"remote:{endpoint}"
        self.timeout = timeout

    def embed(self, texts: list[str]) -> np.ndarray:
        try:
            resp = requests.post(self.endpoint, json={"texts": texts}, timeout=self.timeout)
            resp.raise_for_status()
            vectors = np.asarray(resp.json()["vectors"], dtype=np.float64)
        except Exception as exc:
            raise EmbedderFailure(f"{self.endpoint}: {exc}") from exc
        if vectors.shape != (len(texts), self.d):
            raise EmbedderFailure(
                f"{self.endpoint}: expected shape {(len(texts), self.d)}, got {vectors.shape}"
            )
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return vectors / norms


# ---------------------------------------------------------------------------
# Indexes
# ---------------------------------------------------------------------------

@dataclass
class SparseIndex:
    """BM25 statistics: postings, per-chunk lengths, and corpus counts."""

    postings: dict[str, list[tuple[str, int]]]
    doc_len: dict[str, int]
    avgdl: float
    n_chunks: int
    k1: float = 1.2
    b: float = 0.75

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        df = self.df(term)
        return math.log(1.0 + (self.n_chunks - df + 0.5) / (df + 0.5))


@dataclass
class DenseIndex:
    chunk_ids: list[str]
    matrix: np.ndarray  # (N, d), rows L2-normalized or all-zero
    embedder_id: str
    d: int
    row_of: dict[str, int] = field(default_factory=dict)


@dataclass
class HybridIndex:
    sparse: SparseIndex
    dense: DenseIndex | None
    chunks_by_id: dict[str, Chunk]

    @property
    def n_chunks(self) -> int:
        return self.sparse.n_chunks


def build_index(chunks: list[Chunk], embedder=None, k1: float = 1.2, b: float = 0.75) -> HybridIndex:
    """Index a chunk list: always sparse, dense too when an embedder is given."""
    if not chunks:
        raise ValueError("cannot index zero chunks")
    chunks_by_id: dict[str, Chunk] = {}
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_len: dict[str, int] = {}
    for chunk in chunks:
        if chunk.chunk_id in chunks_by_id:
            raise DuplicateChunkId(chunk.chunk_id)
        chunks_by_id[chunk.chunk_id] = chunk
        terms = index_terms(chunk.text)
        doc_len[chunk.chunk_id] = len(terms)
        tf: dict[str, int] = {}
        for t in terms:
            tf[t] = tf.get(t, 0) + 1
        for t, f in tf.items():
            postings.setdefault(t, []).append((chunk.chunk_id, f))

    sparse = SparseIndex(
        postings=postings,
        doc_len=doc_len,
        avgdl=sum(doc_len.values()) / len(doc_len),
        n_chunks=len(doc_len),
        k1=k1,
        b=b,
    )

    dense = None
    if embedder is not None:
        ids = [c.chunk_id for c in chunks]
        try:
            matrix = np.asarray(embedder.embed([c.text for c in chunks]), dtype=np.float64)
        except EmbedderFailure:
            raise
        except Exception as exc:
            raise EmbedderFailure(
                f"embedding {len(chunks)} chunks (first={ids[0]}) failed: {exc}"
            ) from exc
        dense = DenseIndex(
            chunk_ids=ids,
            matrix=matrix,
            embedder_id=embedder.embedder_id,
            d=embedder.d,
            row_of={cid: i for i, cid in enumerate(ids)},
        )
    return HybridIndex(sparse=sparse, dense=dense, chunks_by_id=chunks_by_id)


# ---------------------------------------------------------------------------
# Scoring and querying
# ---------------------------------------------------------------------------

def bm25_score(idx: SparseIndex, chunk_id: str, query_terms: list[str]) -> float:
    """Okapi BM25 of one chunk against the unique query terms.

    score = sum over unique t of idf(t) * f*(k1+1) / (f + k1*(1 - b + b*len/avgdl)),
    idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)).  Unknown terms contribute 0.
    """
    if chunk_id not in idx.doc_len:
        raise UnknownChunk(chunk_id)
    length_norm = idx.k1 * (1.0 - idx.b + idx.b * idx.doc_len[chunk_id] / idx.avgdl)
    score = 0.0
    for term in dict.fromkeys(query_terms):
        posting = idx.postings.get(term)
        if not posting:
            continue
        f = next((tf for cid, tf in posting if cid == chunk_id), 0)
        if f == 0:
            continue
        score += idx.idf(term) * f * (idx.k1 + 1.0) / (f + length_norm)
    return score


def _sparse_topk(idx: SparseIndex, terms: list[str], k: int) -> list[tuple[str, float]]:
    scores: dict[str, float] = {}
    for term in dict.fromkeys(terms):
        posting = idx.postings.get(term)
        if not posting:
            continue
        idf = idx.idf(term)
        for chunk_id, f in posting:
            length_norm = idx.k1 * (1.0 - idx.b + idx.b * idx.doc_len[chunk_id] / idx.avgdl)
            scores[chunk_id] = scores.get(chunk_id, 0.0) + idf * f * (idx.k1 + 1.0) / (f + length_norm)
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def _dense_topk(idx: DenseIndex, query_vec: np.ndarray, k: int) -> list[tuple[str, float]]:
    sims = idx.matrix @ query_vec
    order = sorted(range(len(idx.chunk_ids)), key=lambda i: (-sims[i], idx.chunk_ids[i]))
    return [(idx.chunk_ids[i], float(sims[i])) for i in order[:k]]


@dataclass(frozen=True)
class RetrievedItem:
    chunk_id: str
    score: float
    source: str  # "dense" | "sparse" | "both"


@dataclass(frozen=True)
class RetrievedContext:
    items: tuple[RetrievedItem, ...]
    query: str

    @property
    def chunk_ids(self) -> list[str]:
        return [item.chunk_id for item in self.items]


def query_topk(idx: HybridIndex, query: str, cfg: RetrievalConfig, embedder=None) -> RetrievedContext:
    """Retrieve top chunks for a query in the configured mode.

    Hybrid ordering interleaves the two arms by rank (dense#1, sparse#1,
    dense#2, ...); a chunk ranked by both arms keeps its earliest slot and
    is marked source="both".  Within an arm, score ties break by chunk_id.
    A query with no index terms still works when a dense arm is available
    (zero query vector, deterministic low-rank ties); otherwise EmptyQuery.
    """
    uses_dense = cfg.mode in (Mode.DENSE_ONLY, Mode.HYBRID)
    uses_sparse = cfg.mode in (Mode.SPARSE_ONLY, Mode.HYBRID)
    if uses_dense and embedder is None:
        raise MissingEmbedder("retrieval mode needs an embedder")
    if uses_dense and idx.dense is None:
        raise MissingEmbedder("index was built without dense vectors")

    terms = index_terms(query)
    if not terms and not uses_dense:
        raise EmptyQuery(query)

    dense_ranked: list[tuple[str, float]] = []
    sparse_ranked: list[tuple[str, float]] = []
    if uses_dense:
        vec = np.asarray(embedder.embed([query]), dtype=np.float64)[0]
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec = vec / norm
        dense_ranked = _dense_topk(idx.dense, vec, cfg.k_dense)
    if uses_sparse:
        sparse_ranked = _sparse_topk(idx.sparse, terms, cfg.k_sparse)

    # slot 2r-1 for dense rank r, slot 2r for sparse rank r
    slots: dict[str, tuple[int, float, str]] = {}
    for r, (cid, score) in enumerate(dense_ranked, start=1):
        slots[cid] = (2 * r - 1, score, "dense")
    for r, (cid, score) in enumerate(sparse_ranked, start=1):
        if cid in slots:
            dense_slot, dense_score, _ = slots[cid]
            if 2 * r < dense_slot:
                slots[cid] = (2 * r, score, "both")
            else:
                slots[cid] = (dense_slot, dense_score, "both")
        else:
            slots[cid] = (2 * r, score, "sparse")

    ordered = sorted(slots.items(), key=lambda kv: kv[1][0])
    items = tuple(RetrievedItem(cid, score, source) for cid, (_, score, source) in ordered)
    return RetrievedContext(items=items, query=query)


# ---------------------------------------------------------------------------
# Context assembly
# ---------------------------------------------------------------------------

CHUNK_SEPARATOR = "\n-----\n"


@dataclass(frozen=True)
class ContextBlock:
    text: str
    included_chunk_ids: tuple[str, ...]
    total_tokens: int


def assemble_context(ctx: RetrievedContext, chunks_by_id: dict[str, Chunk], budget: int) -> ContextBlock:
    """Join retrieved chunk texts, greedily filling the token budget.

    Chunks are taken in retrieval order until the next one would exceed
    the budget; the first chunk is always included even when oversized.
    """
    resolved: list[Chunk] = []
    for item in ctx.items:
        chunk = chunks_by_id.get(item.chunk_id)
        if chunk is None:
            raise UnresolvableChunk(item.chunk_id)
        resolved.append(chunk)
    included: list[Chunk] = []
    total = 0
    for chunk in resolved:
        if included and total + chunk.token_count > budget:
            break
        included.append(chunk)
        total += chunk.token_count
    text = CHUNK_SEPARATOR.join(c.text for c in included)
    return ContextBlock(
        text=text,
        included_chunk_ids=tuple(c.chunk_id for c in included),
        total_tokens=total,
    )


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; any zero vector gives 0 by convention."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
