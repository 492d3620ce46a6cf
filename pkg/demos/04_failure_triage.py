"""The diagnose-and-correct loop on a deliberately weak first pipeline.

Starts from a quick first cut (fixed 1000-token chunks, dense-only top-3,
no grounding), evaluates it, triages the failures into the issue
taxonomy, ranks them, and applies the automatable corrective actions the
catalog recommends.  The corrected configuration is then compared against
the starting point on the same test set.

Run from the repository root:  python3 demos/04_failure_triage.py
"""

from pathlib import Path

from ragkit.chunking import ChunkingConfig, Strategy
from ragkit.diagnosis import (
    auto_diagnose,
    diagnosis_report,
    pareto,
    recommend,
    record_manual_finding,
    render_report_text,
)
from ragkit.evaluation import Verdict, evaluate_run, load_testset
from ragkit.generation import LMConfig, PromptTemplate
from ragkit.pipeline import Pipeline, PipelineConfig, apply_patch, compare_configs
from ragkit.retrieval import Mode, RetrievalConfig

DATA = Path(__file__).parent / "data"


def first_cut_config() -> PipelineConfig:
    return PipelineConfig(
        corpus_manifest=str(DATA / "manifest.json"),
        chunking=ChunkingConfig(Strategy.FIXED, size_tokens=1000, overlap_tokens=0),
        retrieval=RetrievalConfig(mode=Mode.DENSE_ONLY, k_dense=3),
        prompt=PromptTemplate("baseline"),
        lm=LMConfig(endpoint="mock", mock_script=str(DATA / "mock_lm.json")),
    )


def main():
    baseline = first_cut_config()
    pipeline = Pipeline(baseline)
    pipeline.build()
    testset = load_testset(DATA / "testset.jsonl")
    run = evaluate_run(pipeline, testset)
    print(
        f"first cut: correct_rate={run.aggregates['correct_rate']:.2f}, "
        f"mean recall={run.aggregates.get('mean_context_recall', 0):.2f}\n"
    )

    # automatic findings from the metric thresholds, plus what a reviewer
    # would add after reading the failing transcripts
    findings = []
    for record in run.records:
        if record.verdict != Verdict.CORRECT:
            findings.extend(auto_diagnose(record))
    findings.append(
        record_manual_finding(run, "q-mercury", "data_access",
                              "register rows lose their headers under fixed chunking")
    )
    findings.append(
        record_manual_finding(run, "q-zx9400", "unknown_vocab_embedder",
                              "model number drowned out by everyday context words")
    )
    findings.append(
        record_manual_finding(run, "q-autoclave", "inadequate_chunking",
                              "key sentence split across a chunk boundary")
    )

    report = pareto(findings)
    print("== Pareto ranking of findings ==")
    for entry in report.entries:
        print(f"  {entry.issue.value:28s} count={entry.count}  cumulative={entry.cumulative_fraction:.0%}")
    print(
        f"  ({report.total_findings} findings over {report.total_failing_queries} failing "
        "queries; one bad answer can have several causes)\n"
    )

    print("== recommended actions for the top issue ==")
    for action in recommend(report.entries[0].issue):
        tag = "[auto]" if action.automatable else "[advisory]"
        print(f"  {tag} {action.description}")
    print()

    # apply every automatable patch the findings point at
    corrected = baseline
    for entry in report.entries:
        for action in recommend(entry.issue):
            if action.automatable:
                corrected = apply_patch(corrected, action.config_patch)
    # grounding guards against answers from prior knowledge going forward
    corrected = apply_patch(corrected, {"prompt": {"grounding": True}})

    comparison = compare_configs(baseline, corrected, testset)
    print("== before vs after ==")
    for label in ("config_a", "config_b"):
        agg = comparison[label]["aggregates"]
        name = "first cut" if label == "config_a" else "corrected"
        print(
            f"  {name:9s} correct={agg['correct_rate']:.2f} "
            f"recall={agg.get('mean_context_recall', 0):.2f} "
            f"targets={'PASS' if comparison[label]['targets_pass'] else 'FAIL'}"
        )
    print(f"  winner: {comparison['winner']}\n")

    print("== full text report for the corrected run ==")
    corrected_pipeline = Pipeline(corrected)
    corrected_pipeline.build()
    corrected_run = evaluate_run(corrected_pipeline, testset)
    leftover = [
        finding
        for record in corrected_run.records
        if record.verdict != Verdict.CORRECT
        for finding in auto_diagnose(record)
    ]
    print(render_report_text(diagnosis_report(corrected_run, leftover)))


if __name__ == "__main__":
    main()
