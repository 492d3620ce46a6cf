"""Command-line entry points: ingest, index, query, eval, diagnose,
compare, serve.

State lives in a store directory: config.json (the pipeline config),
documents.jsonl (normalized corpus), chunks.jsonl (chunk dump),
tickets.jsonl (feedback), runs/ (evaluation output).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .diagnosis import auto_diagnose, diagnosis_report, load_findings, render_report_text
from .evaluation import Verdict, evaluate_run, load_run, load_testset, save_run
from .ingest import corpus_stats, load_manifest
from .pipeline import (
    Pipeline,
    PipelineConfig,
    compare_configs,
    load_config,
    save_config,
)


def _store_config(store: Path) -> PipelineConfig:
    path = store / "config.json"
    if not path.exists():
        sys.exit(f"no config at {path}; run `ragkit ingest` first")
    return load_config(path)


def cmd_ingest(args) -> int:
    store = Path(args.store)
    store.mkdir(parents=True, exist_ok=True)
    manifest = Path(args.manifest).resolve()
    docs = load_manifest(manifest)
    stats = corpus_stats(docs)
    with open(store / "documents.jsonl", "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(
                json.dumps(
                    {
                        "doc_id": doc.doc_id,
                        "title": doc.title,
                        "format": doc.format.value,
                        "byte_size": doc.byte_size,
                        "raw_text": doc.raw_text,
                    }
                )
                + "\n"
            )
    if args.config:
        config = load_config(args.config)
    else:
        config_path = store / "config.json"
        config = load_config(config_path) if config_path.exists() else PipelineConfig(str(manifest))
    config = PipelineConfig(**{**_as_kwargs(config), "corpus_manifest": str(manifest)})
    save_config(config, store / "config.json")
    for entry in stats.per_document:
        print(f"{entry.doc_id}\t{entry.token_count} tokens\tstructured={entry.structured}")
    print(f"total\t{stats.total_tokens} tokens across {len(docs)} documents")
    return 0


def _as_kwargs(config: PipelineConfig) -> dict:
    return {
        "corpus_manifest": config.corpus_manifest,
        "chunking": config.chunking,
        "retrieval": config.retrieval,
        "embedder": config.embedder,
        "prompt": config.prompt,
        "lm": config.lm,
        "targets": config.targets,
        "thresholds": config.thresholds,
    }


def cmd_index(args) -> int:
    store = Path(args.store)
    pipeline = Pipeline(_store_config(store), store_dir=store)
    count = pipeline.build()
    print(f"indexed {count} chunks (config {pipeline.config_version})")
    return 0


def cmd_query(args) -> int:
    store = Path(args.store)
    pipeline = Pipeline(_store_config(store), store_dir=store)
    pipeline.build()
    response = pipeline.answer_query(args.question)
    print(response.answer)
    print()
    for source in response.sources:
        path = " > ".join(source.section_path) if source.section_path else "-"
        print(f"[{source.doc_title} | {source.chunk_id} | {path}] {source.excerpt[:120]}")
    print(f"(latency {response.latency:.3f}s, cost ${response.cost:.6f}, {response.config_version})")
    return 0


def cmd_eval(args) -> int:
    store = Path(args.store)
    pipeline = Pipeline(_store_config(store), store_dir=store)
    pipeline.build()
    testset = load_testset(args.testset)
    run = evaluate_run(
        pipeline,
        testset,
        n_agreement=args.agreement,
        compute_relevance=args.relevance,
    )
    out = Path(args.out) if args.out else store / "runs" / f"{run.run_id}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_run(run, out)
    for key in ("correct_rate", "acceptable_rate", "incorrect_rate"):
        print(f"{key}: {run.aggregates[key]:.3f}")
    print(f"contradictions: {run.aggregates['contradiction_count']:.0f}")
    print(f"saved {out}")
    return 0


def cmd_diagnose(args) -> int:
    run = load_run(args.run)
    findings = []
    for record in run.records:
        if record.verdict != Verdict.CORRECT:
            findings.extend(auto_diagnose(record))
    if args.findings:
        findings.extend(load_findings(args.findings))
    report = diagnosis_report(run, findings)
    print(render_report_text(report))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2), encoding="utf-8")
        print(f"saved {args.out}")
    return 0


def cmd_compare(args) -> int:
    cfg_a = load_config(args.config_a)
    cfg_b = load_config(args.config_b)
    testset = load_testset(args.testset)
    report = compare_configs(cfg_a, cfg_b, testset)
    print(json.dumps(report, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    from .tickets import TicketStore

    store = Path(args.store)
    pipeline = Pipeline(_store_config(store), store_dir=store)
    pipeline.build()
    app = create_app(pipeline, TicketStore(store / "tickets.jsonl"), token=args.token)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ragkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a corpus manifest into a store")
    p.add_argument("--manifest", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--config", help="pipeline config JSON to install in the store")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="chunk and index the store's corpus")
    p.add_argument("--store", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="answer one question")
    p.add_argument("--store", required=True)
    p.add_argument("question")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="run a test set and save the evaluation run")
    p.add_argument("--store", required=True)
    p.add_argument("--testset", required=True)
    p.add_argument("--out")
    p.add_argument("--agreement", type=int, default=0, help="repeat count for prompt agreement")
    p.add_argument("--relevance", action="store_true", help="compute answer relevance")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diagnose", help="triage a saved evaluation run")
    p.add_argument("--run", required=True)
    p.add_argument("--findings", help="manual findings JSONL to merge")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("compare", help="evaluate a test set under two configs")
    p.add_argument("--config-a", required=True)
    p.add_argument("--config-b", required=True)
    p.add_argument("--testset", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--store", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--token")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
