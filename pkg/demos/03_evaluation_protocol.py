"""Run the evaluation protocol over a gold-annotated test set.

Six test queries (five answerable with known source chunks, one
deliberately unanswerable) go through the full pipeline; every record
gets context precision/recall, faithfulness, a rule-based verdict, and
the run is gated against the release targets: more than 80% correct,
fewer than 20% acceptable, zero contradictions.

Run from the repository root:  python3 demos/03_evaluation_protocol.py
"""

from pathlib import Path

from ragkit.evaluation import Targets, check_targets, evaluate_run, load_testset
from ragkit.generation import LMConfig, PromptTemplate
from ragkit.pipeline import Pipeline, PipelineConfig
from ragkit.retrieval import Mode, RetrievalConfig

DATA = Path(__file__).parent / "data"


def corrected_config() -> PipelineConfig:
    return PipelineConfig(
        corpus_manifest=str(DATA / "manifest.json"),
        chunking="auto",
        retrieval=RetrievalConfig(mode=Mode.HYBRID, k_dense=5, k_sparse=5),
        prompt=PromptTemplate("grounded", grounding=True),
        lm=LMConfig(
            endpoint="mock",
            mock_script=str(DATA / "mock_lm.json"),
            price_in=0.5,
            price_out=1.5,
        ),
    )


def main():
    pipeline = Pipeline(corrected_config())
    chunk_count = pipeline.build()
    print(f"pipeline ready: {chunk_count} chunks, config {pipeline.config_version}\n")

    testset = load_testset(DATA / "testset.jsonl")
    run = evaluate_run(pipeline, testset, n_agreement=3)

    print("== per-query records ==")
    for record in run.records:
        prec = "-" if record.context_precision is None else f"{record.context_precision:.2f}"
        rec = "-" if record.context_recall is None else f"{record.context_recall:.2f}"
        faith = "-" if record.faithfulness is None else f"{record.faithfulness:.2f}"
        agree = "-" if record.prompt_agreement is None else f"{record.prompt_agreement:.2f}"
        print(
            f"  {record.query_id:13s} {record.verdict.value:10s} "
            f"precision={prec} recall={rec} faithfulness={faith} agreement={agree}"
        )

    print("\n== aggregates ==")
    for key in sorted(run.aggregates):
        print(f"  {key}: {run.aggregates[key]:.4f}")

    report = check_targets(run, Targets())
    print(f"\n== target gate: {'PASS' if report.passed else 'FAIL'} ==")
    for violation in report.violations:
        print(
            f"  {violation['criterion']} = {violation['value']:.3f} "
            f"(needs {violation['relation']} {violation['limit']})"
        )


if __name__ == "__main__":
    main()
