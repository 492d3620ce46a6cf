"""The production loop: query API, feedback tickets, and reindexing.

Drives the HTTP service in-process: asks a question, reports the answer
as incorrect, walks the ticket through the expert workflow, adds a new
document to the corpus, and reindexes without downtime.

The same API runs standalone via:
  ragkit ingest --manifest demos/data/manifest.json --store /tmp/ragstore
  ragkit serve --store /tmp/ragstore --port 8000

Run from the repository root:  python3 demos/05_feedback_service.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from ragkit.generation import LMConfig, PromptTemplate
from ragkit.pipeline import Pipeline, PipelineConfig
from ragkit.retrieval import Mode, RetrievalConfig
from ragkit.service import create_app
from ragkit.tickets import TicketStore

DATA = Path(__file__).parent / "data"


def main():
    workdir = Path(tempfile.mkdtemp(prefix="ragkit-demo-"))
    corpus = workdir / "corpus"
    corpus.mkdir()
    for path in DATA.iterdir():
        (corpus / path.name).write_bytes(path.read_bytes())

    config = PipelineConfig(
        corpus_manifest=str(corpus / "manifest.json"),
        chunking="auto",
        retrieval=RetrievalConfig(mode=Mode.HYBRID, k_dense=5, k_sparse=5),
        prompt=PromptTemplate("grounded", grounding=True),
        lm=LMConfig(endpoint="mock", mock_script=str(corpus / "mock_lm.json")),
    )
    pipeline = Pipeline(config, store_dir=workdir / "store")
    pipeline.build()
    tickets = TicketStore(workdir / "store" / "tickets.jsonl")
    client = TestClient(create_app(pipeline, tickets))

    print("== health ==")
    print(" ", client.get("/api/health").json(), "\n")

    print("== ask a question ==")
    answer = client.post(
        "/api/query",
        json={"question": "how long does the autoclave sterilization cycle run and at what pressure setting"},
    ).json()
    print(f"  answer: {answer['answer']}")
    for source in answer["sources"][:3]:
        path = " > ".join(source["section_path"]) or "-"
        print(f"  source: {source['doc_title']} [{source['chunk_id']}] ({path})")
    print()

    print("== report an incorrect answer ==")
    ticket_id = client.post(
        "/api/feedback",
        json={"question": "who signs the audit summary", "answer_given": answer["answer"],
              "reporter": "operator-2"},
    ).json()["ticket_id"]
    print(f"  ticket {ticket_id} filed")
    queue = client.get("/api/feedback", params={"status": "open"}).json()
    print(f"  open queue: {[t['ticket_id'] for t in queue]}")
    print(f"  next steps offered: {queue[0]['allowed_transitions']}\n")

    print("== expert workflow ==")
    for step, note in (
        ("expert_answered", "told the operator: the quality manager signs it"),
        ("dataset_updated", "added the audit sign-off memo to the corpus"),
        ("closed", "verified after reindex"),
    ):
        ticket = client.post(
            f"/api/feedback/{ticket_id}/transition",
            json={"to": step, "note": note, "author": "data-expert"},
        ).json()
        print(f"  -> {ticket['status']} ({note})")
    print()

    print("== dataset update + reindex ==")
    (corpus / "audit_signoff.txt").write_text(
        "Audit summary sign-off. The audit summary is signed by the quality manager "
        "before it is presented at the management review.",
        encoding="utf-8",
    )
    manifest = json.loads((corpus / "manifest.json").read_text(encoding="utf-8"))
    manifest.append({"path": "audit_signoff.txt", "doc_id": "audit_signoff",
                     "title": "Audit sign-off memo"})
    (corpus / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
    result = client.post("/api/reindex").json()
    print(f"  reindexed: {result['chunk_count']} chunks under {result['new_config_version']}")
    print(" ", client.get("/api/health").json())


if __name__ == "__main__":
    main()
