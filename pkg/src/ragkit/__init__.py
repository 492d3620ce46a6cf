"""ragkit: retrieval-augmented question answering for desk-scale corpora.

Ingest plain text / markdown / CSV documents, chunk them, serve top-k
hybrid BM25+dense retrieval into a prompted language model, evaluate the
whole pipeline against a gold test set, triage failures into corrective
actions, and run the production feedback loop (query API + tickets +
reindexing).
"""

from .chunking import Chunk, ChunkingConfig, Strategy, auto_strategy, chunk_document, chunk_table
from .diagnosis import (
    CorrectiveAction,
    DiagnosticThresholds,
    IssueClass,
    IssueFinding,
    ParetoReport,
    auto_diagnose,
    diagnosis_report,
    pareto,
    recommend,
)
from .evaluation import (
    EvaluationRun,
    Targets,
    TestQuery,
    Verdict,
    answer_relevance,
    check_targets,
    classify_verdict,
    context_precision,
    context_recall,
    evaluate_run,
    faithfulness,
    prompt_agreement,
)
from .generation import (
    GROUNDING_SENTENCE,
    GenerationResult,
    LMConfig,
    PromptTemplate,
    compute_cost,
    generate,
    render_prompt,
)
from .ingest import (
    CorpusStats,
    DocFormat,
    DocumentTree,
    SourceDocument,
    TableDocument,
    Unstructured,
    corpus_stats,
    load_document,
    load_manifest,
    parse_structure,
    parse_table,
)
from .pipeline import (
    Pipeline,
    PipelineConfig,
    QueryResponse,
    apply_patch,
    compare_configs,
    load_config,
    save_config,
)
from .retrieval import (
    HashEmbedder,
    HybridIndex,
    Mode,
    RetrievalConfig,
    RetrievedContext,
    assemble_context,
    bm25_score,
    build_index,
    hash_embed,
    query_topk,
)
from .tickets import FeedbackTicket, TicketStatus, TicketStore, allowed_transitions
from .tokens import count_tokens, index_terms

__version__ = "0.1.0"
