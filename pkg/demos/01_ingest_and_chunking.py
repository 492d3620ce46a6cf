"""Walk through corpus ingestion and the chunking strategies.

Loads the sample laboratory corpus (a structured manual, a CSV methods
register, a short instrument note, and three maintenance memos), prints
corpus statistics, then shows how each chunking strategy cuts the same
material differently.

Run from the repository root:  python3 demos/01_ingest_and_chunking.py
"""

from pathlib import Path

from ragkit.chunking import ChunkingConfig, Strategy, auto_strategy, chunk_document, chunk_table
from ragkit.ingest import DocFormat, corpus_stats, load_manifest, parse_structure, parse_table

DATA = Path(__file__).parent / "data"


def main():
    docs = load_manifest(DATA / "manifest.json")
    stats = corpus_stats(docs)

    print("== corpus overview ==")
    for entry in stats.per_document:
        print(f"  {entry.doc_id:18s} {entry.token_count:5d} tokens  structured={entry.structured}")
    print(f"  total: {stats.total_tokens} tokens across {len(docs)} documents\n")

    manual = next(d for d in docs if d.doc_id == "lab_manual")
    register = next(d for d in docs if d.doc_id == "methods_register")

    print("== heading outline of the manual ==")
    tree = parse_structure(manual)
    for node, path in tree.walk():
        print(f"  {'  ' * (len(path) - 1)}{node.heading}")
    print()

    print("== one document, four strategies ==")
    for cfg in (
        ChunkingConfig(Strategy.WHOLE_DOC),
        ChunkingConfig(Strategy.FIXED, size_tokens=1000, overlap_tokens=0),
        ChunkingConfig(Strategy.RECURSIVE, max_tokens=200),
        ChunkingConfig(Strategy.HIERARCHICAL, max_tokens=1000),
    ):
        chunks = chunk_document(manual, cfg)
        sizes = ", ".join(str(c.token_count) for c in chunks[:8])
        more = " ..." if len(chunks) > 8 else ""
        print(f"  {cfg.strategy.value:13s} -> {len(chunks):3d} chunks  (tokens: {sizes}{more})")
    print()

    print("== table rows become self-describing chunks ==")
    table = parse_table(register)
    rows = chunk_table(table, ChunkingConfig(Strategy.TABLE_ROW))
    print(f"  {len(rows)} row chunks from {len(table.rows)} data rows; row 7 reads:")
    print(f"  {rows[7].text[:110]}...\n")

    print("== auto strategy picks per document ==")
    for doc in docs:
        structure = parse_structure(doc) if doc.format != DocFormat.CSV_TABLE else None
        cfg = auto_strategy(doc, structure, stats)
        print(f"  {doc.doc_id:18s} -> {cfg.strategy.value}")


if __name__ == "__main__":
    main()
