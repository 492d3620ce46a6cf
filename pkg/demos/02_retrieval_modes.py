"""Compare dense, sparse, and hybrid retrieval on the same index.

The instrument note for the ZX9400 carries a model number the bag-of-terms
embedder dilutes among maintenance memos that share the query's everyday
vocabulary.  Keyword (BM25) retrieval pins it exactly; hybrid keeps both
behaviors.

Run from the repository root:  python3 demos/02_retrieval_modes.py
"""

from pathlib import Path

from ragkit.ingest import load_manifest
from ragkit.pipeline import chunk_corpus
from ragkit.retrieval import (
    HashEmbedder,
    Mode,
    RetrievalConfig,
    assemble_context,
    build_index,
    query_topk,
)

DATA = Path(__file__).parent / "data"
QUERY = "what is the calibration threshold for the zx9400 in the acid bath area"


def main():
    docs = load_manifest(DATA / "manifest.json")
    chunks = chunk_corpus(docs, "auto")
    embedder = HashEmbedder()
    index = build_index(chunks, embedder)
    print(f"indexed {len(chunks)} chunks from {len(docs)} documents\n")

    print(f"query: {QUERY!r}\n")
    for mode in (Mode.DENSE_ONLY, Mode.SPARSE_ONLY, Mode.HYBRID):
        cfg = RetrievalConfig(mode=mode, k_dense=3, k_sparse=3)
        result = query_topk(index, QUERY, cfg, embedder)
        print(f"== {mode.value} ==")
        for item in result.items:
            marker = " <-- the chunk that actually answers" if item.chunk_id == "zx9400_unit#0" else ""
            print(f"  {item.chunk_id:22s} score={item.score:7.3f} via {item.source}{marker}")
        print()

    hybrid = query_topk(index, QUERY, RetrievalConfig(mode=Mode.HYBRID, k_dense=3, k_sparse=3), embedder)
    block = assemble_context(hybrid, index.chunks_by_id, budget=3000)
    print("== assembled context (hybrid, 3000-token budget) ==")
    print(f"  {len(block.included_chunk_ids)} chunks, {block.total_tokens} tokens")
    print(f"  first 160 chars: {block.text[:160]!r}")


if __name__ == "__main__":
    main()
