from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragkit.diagnosis import (
    CATALOG,
    DiagnosticThresholds,
    IssueClass,
    IssueFinding,
    ParetoReport,
    auto_diagnose,
    diagnosis_report,
    load_findings,
    pareto,
    recommend,
    record_manual_finding,
    render_report_text,
)
from ragkit.errors import UnknownQuery
from ragkit.evaluation import QueryRecord, Verdict

from test_evaluation import synthetic_run


def failing_record(query_id="q1", **metrics) -> QueryRecord:
    return QueryRecord(
        query_id=query_id,
        retrieved_ids=["c#0"],
        answer="a",
        latency=0.01,
        cost=0.0,
        verdict=Verdict.INCORRECT,
        contradiction=False,
        **metrics,
    )


# ---------------------------------------------------------------------------
# auto_diagnose
# ---------------------------------------------------------------------------

def test_zero_recall_flags_recall_issue():
    findings = auto_diagnose(failing_record(context_recall=0.0))
    assert [f.issue for f in findings] == [IssueClass.CHUNK_RETRIEVAL_RECALL]
    assert findings[0].origin == "automatic"
    assert "context_recall=0.000" in findings[0].evidence


def test_all_metrics_above_thresholds_no_findings():
    record = failing_record(
        context_precision=0.9,
        context_recall=1.0,
        faithfulness=0.9,
        answer_relevance=0.9,
        prompt_agreement=1.0,
    )
    assert auto_diagnose(record) == []


def test_multiple_findings_on_one_query():
    record = failing_record(context_precision=0.2, faithfulness=0.3)
    issues = {f.issue for f in auto_diagnose(record)}
    assert issues == {IssueClass.CHUNK_RETRIEVAL_PRECISION, IssueClass.PRIOR_KNOWLEDGE_ANSWER}


def test_not_applicable_metrics_emit_nothing():
    record = failing_record()  # all metrics None
    assert auto_diagnose(record) == []


def test_auto_diagnose_rejects_correct_records():
    record = failing_record()
    record.verdict = Verdict.CORRECT
    with pytest.raises(ValueError):
        auto_diagnose(record)


def test_custom_thresholds():
    record = failing_record(prompt_agreement=0.85)
    assert auto_diagnose(record) == []
    strict = DiagnosticThresholds(min_agreement=0.9)
    assert [f.issue for f in auto_diagnose(record, thresholds=strict)] == [IssueClass.INCONSISTENCY]


# ---------------------------------------------------------------------------
# manual findings
# ---------------------------------------------------------------------------

def test_record_manual_finding(tmp_path):
    run = synthetic_run(1, 0, 2)
    store = tmp_path / "findings.jsonl"
    finding = record_manual_finding(
        run, "i0", IssueClass.DATA_ACCESS, "spreadsheet rows lost headers", store_path=store
    )
    assert finding.origin == "manual"
    again = record_manual_finding(
        run, "i1", IssueClass.UNKNOWN_VOCAB_EMBEDDER, "rare keyword ignored", store_path=store
    )
    loaded = load_findings(store)
    assert loaded == [finding, again]


def test_record_manual_finding_unknown_query():
    run = synthetic_run(1, 0, 1)
    with pytest.raises(UnknownQuery):
        record_manual_finding(run, "ghost", IssueClass.DATA_ACCESS, "x")


# ---------------------------------------------------------------------------
# catalog / recommend
# ---------------------------------------------------------------------------

def test_catalog_has_twelve_rows_with_actions():
    assert len(IssueClass) == 12
    assert set(CATALOG) == set(IssueClass)
    for issue in IssueClass:
        assert len(recommend(issue)) >= 1


def test_recommend_embedder_vocab_row():
    actions = recommend(IssueClass.UNKNOWN_VOCAB_EMBEDDER)
    assert actions[0].description == "Integrate sparse vectorisation techniques"
    assert actions[0].config_patch == {"retrieval": {"mode": "hybrid"}}
    assert actions[1].description == "employ a synonym dictionary to expand vocabulary coverage"
    assert not actions[1].automatable


def test_recommend_inconsistency_row():
    actions = recommend(IssueClass.INCONSISTENCY)
    assert actions[0].description == "Reduce the LM temperature"
    assert actions[0].config_patch == {"lm": {"temperature": 0.0}}
    assert [a.automatable for a in actions] == [True, False, False]


def test_recommend_prior_knowledge_row():
    actions = recommend(IssueClass.PRIOR_KNOWLEDGE_ANSWER)
    assert actions[0].description == "Apply grounding techniques within the prompt"
    assert actions[0].config_patch == {"prompt": {"grounding": True}}
    assert "fact-checking" in actions[1].description


def test_metric_mapping_matches_catalog():
    metric_rows = {row.metric for row in CATALOG.values() if row.metric}
    assert metric_rows == {
        "context_precision",
        "context_recall",
        "faithfulness",
        "answer_relevance",
        "prompt_agreement",
    }


# ---------------------------------------------------------------------------
# pareto
# ---------------------------------------------------------------------------

def find(query_id, issue) -> IssueFinding:
    return IssueFinding(query_id=query_id, issue=issue, origin="manual", evidence="")


def test_pareto_counts_and_cumulative():
    findings = (
        [find(f"q{i}", IssueClass.DATA_ACCESS) for i in range(5)]
        + [find(f"q{i+5}", IssueClass.INCONSISTENCY) for i in range(3)]
        + [find(f"q{i+8}", IssueClass.IMPROPER_FORMAT) for i in range(2)]
    )
    report = pareto(findings)
    assert [e.count for e in report.entries] == [5, 3, 2]
    assert [e.cumulative_fraction for e in report.entries] == pytest.approx([0.5, 0.8, 1.0])


def test_pareto_empty():
    report = pareto([])
    assert report.entries == ()
    assert report.total_findings == 0
    assert report.total_failing_queries == 0


def test_pareto_multi_label_exceeds_failing_queries():
    rng = random.Random(0)
    issues = list(IssueClass)
    findings = []
    for q in range(14):
        for issue in rng.sample(issues, 1 + (q % 2)):  # 1 or 2 issues per query
            findings.append(find(f"q{q}", issue))
    report = pareto(findings)
    assert report.total_failing_queries == 14
    assert report.total_findings == 21
    assert report.total_findings > report.total_failing_queries


def test_pareto_tie_breaks_by_issue_name():
    findings = [find("q1", IssueClass.INCONSISTENCY), find("q2", IssueClass.DATA_ACCESS)]
    report = pareto(findings)
    assert [e.issue for e in report.entries] == [IssueClass.DATA_ACCESS, IssueClass.INCONSISTENCY]


@given(st.lists(st.tuples(st.integers(0, 30), st.sampled_from(list(IssueClass))), max_size=80))
@settings(max_examples=50, deadline=None)
def test_pareto_monotone(pairs):
    findings = [find(f"q{q}", issue) for q, issue in pairs]
    report = pareto(findings)
    counts = [e.count for e in report.entries]
    assert counts == sorted(counts, reverse=True)
    fractions = [e.cumulative_fraction for e in report.entries]
    assert fractions == sorted(fractions)
    if findings:
        assert fractions[-1] == pytest.approx(1.0)
        assert report.total_findings >= report.total_failing_queries


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def test_report_orders_issues_and_lists_actions():
    run = synthetic_run(10, 2, 7)
    findings = [find(f"i{i % 7}", IssueClass.CHUNK_RETRIEVAL_RECALL) for i in range(5)] + [
        find(f"i{i}", IssueClass.DATA_ACCESS) for i in range(2)
    ]
    report = diagnosis_report(run, findings)
    assert report["targets"]["pass"] is False
    assert report["issues"][0]["issue"] == "chunk_retrieval_recall"
    assert report["issues"][0]["actions"][0]["description"] == "Increase the amount of context"
    text = render_report_text(report)
    assert "chunk_retrieval_recall" in text and "FAIL" in text


def test_report_all_pass_empty_pareto():
    run = synthetic_run(49, 1, 0)
    report = diagnosis_report(run, [])
    assert report["targets"]["pass"] is True
    assert report["pareto"]["entries"] == []
    assert "PASS" in render_report_text(report)


def test_report_pareto_round_trips_through_json():
    findings = [find("q1", IssueClass.DATA_ACCESS), find("q2", IssueClass.DATA_ACCESS)]
    run = synthetic_run(1, 0, 2)
    report = diagnosis_report(run, findings)
    reparsed = ParetoReport.from_dict(json.loads(json.dumps(report["pareto"])))
    assert reparsed == pareto(findings)
