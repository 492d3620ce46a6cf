"""Configured end-to-end pipeline: ingest -> chunk -> index -> retrieve ->
prompt -> generate, plus reindexing and config comparison.

Configuration is a single versioned value object; the version string is a
content hash, so any tuning change is traceable in query responses and
evaluation runs.  The index lives in an immutable snapshot that reindex()
replaces atomically: in-flight queries keep the snapshot they started
with and never observe a half-built index.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .chunking import Chunk, ChunkingConfig, Strategy, auto_strategy, chunk_document, chunk_table
from .diagnosis import DiagnosticThresholds
from .errors import IndexNotReady, IngestError, RagError
from .evaluation import EvaluationRun, Targets, check_targets, evaluate_run
from .generation import LMConfig, PromptTemplate, generate, render_prompt
from .ingest import (
    DocFormat,
    SourceDocument,
    corpus_stats,
    load_manifest,
    parse_structure,
    parse_table,
)
from .retrieval import (
    HashEmbedder,
    HybridIndex,
    Mode,
    RemoteEmbedder,
    RetrievalConfig,
    assemble_context,
    build_index,
    query_topk,
)

logger = logging.getLogger(__name__)

EXCERPT_CHARS = 300


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbedderSpec:
    kind: str = "hash"  # "hash" | "remote"
    endpoint: str | None = None
    d: int = 64

    def __post_init__(self):
        if self.kind not in ("hash", "remote"):
            raise ValueError(f"unknown embedder kind: {self.kind}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote embedder needs an endpoint")

    def build(self):
        if self.kind == "hash":
            return HashEmbedder()
        return RemoteEmbedder(self.endpoint, self.d)


@dataclass(frozen=True)
class PipelineConfig:
    corpus_manifest: str
    chunking: ChunkingConfig | str = "auto"
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    embedder: EmbedderSpec = field(default_factory=EmbedderSpec)
    prompt: PromptTemplate = field(default_factory=lambda: PromptTemplate("baseline"))
    lm: LMConfig = field(default_factory=LMConfig)
    targets: Targets = field(default_factory=Targets)
    thresholds: DiagnosticThresholds = field(default_factory=DiagnosticThresholds)

    def __post_init__(self):
        if isinstance(self.chunking, str) and self.chunking != "auto":
            raise ValueError(f"chunking must be a ChunkingConfig or 'auto', got {self.chunking!r}")

    @property
    def version(self) -> str:
        canonical = json.dumps(config_to_dict(self), sort_keys=True, separators=(",", ":"))
        return "cfg-" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def config_to_dict(cfg: PipelineConfig) -> dict:
    chunking = cfg.chunking if isinstance(cfg.chunking, str) else {
        "strategy": cfg.chunking.strategy.value,
        "size_tokens": cfg.chunking.size_tokens,
        "overlap_tokens": cfg.chunking.overlap_tokens,
        "max_tokens": cfg.chunking.max_tokens,
        "short_doc_threshold_tokens": cfg.chunking.short_doc_threshold_tokens,
    }
    return {
        "corpus_manifest": cfg.corpus_manifest,
        "chunking": chunking,
        "retrieval": {
            "mode": cfg.retrieval.mode.value,
            "k_dense": cfg.retrieval.k_dense,
            "k_sparse": cfg.retrieval.k_sparse,
            "context_budget_tokens": cfg.retrieval.context_budget_tokens,
        },
        "embedder": {"kind": cfg.embedder.kind, "endpoint": cfg.embedder.endpoint, "d": cfg.embedder.d},
        "prompt": {
            "template_id": cfg.prompt.template_id,
            "body": cfg.prompt.body,
            "grounding": cfg.prompt.grounding,
            "step_by_step": cfg.prompt.step_by_step,
            "persona": cfg.prompt.persona,
            "few_shot": list(cfg.prompt.few_shot),
        },
        "lm": {
            "endpoint": cfg.lm.endpoint,
            "model_id": cfg.lm.model_id,
            "temperature": cfg.lm.temperature,
            "max_output_tokens": cfg.lm.max_output_tokens,
            "price_in": cfg.lm.price_in,
            "price_out": cfg.lm.price_out,
            "timeout": cfg.lm.timeout,
            "mock_script": cfg.lm.mock_script,
        },
        "targets": {
            "min_correct_rate": cfg.targets.min_correct_rate,
            "max_acceptable_rate": cfg.targets.max_acceptable_rate,
            "max_contradictions": cfg.targets.max_contradictions,
            "max_latency": cfg.targets.max_latency,
        },
        "thresholds": {
            "min_precision": cfg.thresholds.min_precision,
            "min_recall": cfg.thresholds.min_recall,
            "min_faithfulness": cfg.thresholds.min_faithfulness,
            "min_relevance": cfg.thresholds.min_relevance,
            "min_agreement": cfg.thresholds.min_agreement,
        },
    }


def config_from_dict(raw: dict) -> PipelineConfig:
    chunking_raw = raw.get("chunking", "auto")
    if isinstance(chunking_raw, str):
        chunking: ChunkingConfig | str = chunking_raw
    else:
        chunking = ChunkingConfig(
            strategy=Strategy(chunking_raw["strategy"]),
            **{
                k: chunking_raw[k]
                for k in ("size_tokens", "overlap_tokens", "max_tokens", "short_doc_threshold_tokens")
                if k in chunking_raw
            },
        )
    retrieval_raw = dict(raw.get("retrieval", {}))
    if "mode" in retrieval_raw:
        retrieval_raw["mode"] = Mode(retrieval_raw["mode"])
    prompt_raw = dict(raw.get("prompt", {}))
    prompt_raw.setdefault("template_id", "baseline")
    prompt_raw["few_shot"] = tuple(prompt_raw.get("few_shot", ()))
    embedder_raw = raw.get("embedder", {})
    return PipelineConfig(
        corpus_manifest=raw["corpus_manifest"],
        chunking=chunking,
        retrieval=RetrievalConfig(**retrieval_raw),
        embedder=EmbedderSpec(**{k: v for k, v in embedder_raw.items() if v is not None}),
        prompt=PromptTemplate(**prompt_raw),
        lm=LMConfig(**raw.get("lm", {})),
        targets=Targets(**raw.get("targets", {})),
        thresholds=DiagnosticThresholds(**raw.get("thresholds", {})),
    )


def apply_patch(cfg: PipelineConfig, patch: dict) -> PipelineConfig:
    """Deep-merge a partial config dict over an existing config.

    Nested dicts merge key-by-key; scalars, lists, and the "auto" chunking
    marker replace wholesale.  The result is re-validated on construction.
    """
    merged = _deep_merge(config_to_dict(cfg), patch)
    return config_from_dict(merged)


def _deep_merge(base, patch):
    if isinstance(base, dict) and isinstance(patch, dict):
        out = dict(base)
        for key, value in patch.items():
            out[key] = _deep_merge(base.get(key), value) if key in base else value
        return out
    return patch


def save_config(cfg: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2), encoding="utf-8")


def load_config(path: str | Path) -> PipelineConfig:
    return config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Query responses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Source:
    doc_id: str
    doc_title: str
    chunk_id: str
    excerpt: str
    score: float
    section_path: tuple[str, ...]


@dataclass(frozen=True)
class QueryResponse:
    answer: str
    sources: tuple[Source, ...]
    latency: float
    cost: float
    config_version: str

    def to_dict(self) -> dict:
        return {
            "answer": self.answer,
            "sources": [
                {
                    "doc_id": s.doc_id,
                    "doc_title": s.doc_title,
                    "chunk_id": s.chunk_id,
                    "excerpt": s.excerpt,
                    "score": s.score,
                    "section_path": list(s.section_path),
                }
                for s in self.sources
            ],
            "latency": self.latency,
            "cost": self.cost,
            "config_version": self.config_version,
        }


@dataclass(frozen=True)
class QueryOutcome:
    """Full per-query trace consumed by the evaluation harness."""

    answer: str
    retrieved_ids: tuple[str, ...]
    context_text: str
    latency: float
    cost: float
    response: QueryResponse


@dataclass(frozen=True)
class _IndexState:
    generation: int
    documents: dict[str, SourceDocument]
    chunks: tuple[Chunk, ...]
    index: HybridIndex


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

class Pipeline:
    """A built, queryable RAG pipeline for one configuration."""

    def __init__(self, config: PipelineConfig, store_dir: str | Path | None = None):
        self.config = config
        self.store_dir = Path(store_dir) if store_dir is not None else None
        self.embedder = config.embedder.build()
        self._state: _IndexState | None = None
        self._reindex_lock = threading.Lock()

    @property
    def config_version(self) -> str:
        return self.config.version

    @property
    def lm_config(self) -> LMConfig:
        return self.config.lm

    @property
    def chunk_count(self) -> int:
        state = self._state
        return len(state.chunks) if state is not None else 0

    # -- building ----------------------------------------------------------

    def build(self) -> int:
        """Initial ingest + chunk + index.  Returns the chunk count."""
        state = self._build_state(generation=1)
        self._state = state
        self._persist_chunks(state)
        return len(state.chunks)

    def reindex(self) -> dict:
        """Full rebuild swapped in atomically.

        Any ingest failure aborts the swap and leaves the old index live.
        In-flight queries holding the old snapshot finish on it.
        """
        with self._reindex_lock:
            current = self._state
            generation = (current.generation if current else 0) + 1
            state = self._build_state(generation=generation)
            self._persist_chunks(state)
            self._state = state
            logger.info("reindexed: generation=%d chunks=%d", generation, len(state.chunks))
            return {"new_config_version": self.config_version, "chunk_count": len(state.chunks)}

    def _build_state(self, generation: int) -> _IndexState:
        try:
            documents = load_manifest(self.config.corpus_manifest)
        except RagError as exc:
            raise IngestError(str(self.config.corpus_manifest), exc) from exc
        except (OSError, ValueError, KeyError) as exc:
            raise IngestError(str(self.config.corpus_manifest), exc) from exc
        chunks = chunk_corpus(documents, self.config.chunking)
        index = build_index(chunks, embedder=self.embedder)
        return _IndexState(
            generation=generation,
            documents={d.doc_id: d for d in documents},
            chunks=tuple(chunks),
            index=index,
        )

    def _persist_chunks(self, state: _IndexState) -> None:
        if self.store_dir is None:
            return
        self.store_dir.mkdir(parents=True, exist_ok=True)
        tmp = self.store_dir / "chunks.jsonl.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            for chunk in state.chunks:
                fh.write(json.dumps(chunk_to_dict(chunk)) + "\n")
        tmp.replace(self.store_dir / "chunks.jsonl")

    # -- querying ----------------------------------------------------------

    def run_query(self, question: str) -> QueryOutcome:
        """Retrieve, assemble, render, generate; returns the full trace."""
        state = self._state
        if state is None:
            raise IndexNotReady("build or reindex the pipeline first")
        question = question.strip()
        if not question:
            raise ValueError("question must be non-empty")

        started = time.perf_counter()
        retrieved = query_topk(state.index, question, self.config.retrieval, self.embedder)
        block = assemble_context(
            retrieved, state.index.chunks_by_id, self.config.retrieval.context_budget_tokens
        )
        prompt = render_prompt(self.config.prompt, block, question)
        result = generate(self.config.lm, prompt)
        latency = time.perf_counter() - started

        score_by_id = {item.chunk_id: item.score for item in retrieved.items}
        sources = []
        for chunk_id in block.included_chunk_ids:
            chunk = state.index.chunks_by_id[chunk_id]
            doc = state.documents.get(chunk.doc_id)
            sources.append(
                Source(
                    doc_id=chunk.doc_id,
                    doc_title=doc.title if doc else chunk.doc_id,
                    chunk_id=chunk_id,
                    excerpt=chunk.text[:EXCERPT_CHARS],
                    score=score_by_id[chunk_id],
                    section_path=chunk.section_path,
                )
            )
        response = QueryResponse(
            answer=result.answer,
            sources=tuple(sources),
            latency=latency,
            cost=result.cost,
            config_version=self.config_version,
        )
        return QueryOutcome(
            answer=result.answer,
            retrieved_ids=tuple(retrieved.chunk_ids),
            context_text=block.text,
            latency=latency,
            cost=result.cost,
            response=response,
        )

    def answer_query(self, question: str) -> QueryResponse:
        return self.run_query(question).response


def chunk_corpus(documents: list[SourceDocument], chunking: ChunkingConfig | str) -> list[Chunk]:
    """Chunk a whole corpus under an explicit config or per-document auto."""
    stats = corpus_stats(documents)
    chunks: list[Chunk] = []
    for doc in documents:
        structure = parse_structure(doc) if doc.format != DocFormat.CSV_TABLE else None
        if chunking == "auto":
            cfg = auto_strategy(doc, structure, stats)
        else:
            cfg = chunking
        if cfg.strategy == Strategy.TABLE_ROW:
            chunks.extend(chunk_table(parse_table(doc), cfg))
        else:
            chunks.extend(chunk_document(doc, cfg, structure))
    return chunks


# ---------------------------------------------------------------------------
# Chunk dump (JSONL)
# ---------------------------------------------------------------------------

def chunk_to_dict(chunk: Chunk) -> dict:
    return {
        "chunk_id": chunk.chunk_id,
        "doc_id": chunk.doc_id,
        "text": chunk.text,
        "token_count": chunk.token_count,
        "section_path": list(chunk.section_path),
    }


def load_chunk_dump(path: str | Path) -> list[Chunk]:
    chunks = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        chunks.append(
            Chunk(
                chunk_id=raw["chunk_id"],
                doc_id=raw["doc_id"],
                text=raw["text"],
                token_count=raw["token_count"],
                section_path=tuple(raw.get("section_path", ())),
            )
        )
    return chunks


# ---------------------------------------------------------------------------
# Config comparison
# ---------------------------------------------------------------------------

def compare_configs(
    cfg_a: PipelineConfig,
    cfg_b: PipelineConfig,
    testset,
    n_agreement: int = 0,
    compute_relevance: bool = False,
) -> dict:
    """Evaluate the same test set under two configs and report deltas.

    The winner is the config that passes its targets when the other does
    not; between equals, the higher correct rate wins.
    """
    results = {}
    runs: dict[str, EvaluationRun] = {}
    for label, cfg in (("config_a", cfg_a), ("config_b", cfg_b)):
        pipeline = Pipeline(cfg)
        pipeline.build()
        run = evaluate_run(
            pipeline, testset, n_agreement=n_agreement, compute_relevance=compute_relevance
        )
        gate = check_targets(run, cfg.targets)
        runs[label] = run
        results[label] = {
            "config_version": cfg.version,
            "aggregates": dict(run.aggregates),
            "targets_pass": gate.passed,
            "violations": list(gate.violations),
        }

    agg_a, agg_b = results["config_a"]["aggregates"], results["config_b"]["aggregates"]
    deltas = {key: agg_b[key] - agg_a[key] for key in agg_a if key in agg_b}

    pass_a, pass_b = results["config_a"]["targets_pass"], results["config_b"]["targets_pass"]
    if pass_a != pass_b:
        winner = "config_a" if pass_a else "config_b"
    elif agg_a["correct_rate"] != agg_b["correct_rate"]:
        winner = "config_a" if agg_a["correct_rate"] > agg_b["correct_rate"] else "config_b"
    else:
        winner = "tie"

    return {
        "config_a": results["config_a"],
        "config_b": results["config_b"],
        "deltas": deltas,
        "winner": winner,
        "runs": {label: run.run_id for label, run in runs.items()},
    }
