"""Failure triage: classify failing queries into a fixed issue taxonomy,
rank issues by frequency, and recommend corrective actions.

Five issue classes are detected automatically from metric thresholds; the
rest are entered manually by a reviewer.  One failing query may carry
several findings, so the ranked total can exceed the failing-query count.
Each catalog action that corresponds to a pipeline switch carries a
config patch that can be applied and re-evaluated directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import UnknownQuery
from .evaluation import EvaluationRun, Targets, Verdict, check_targets


class IssueClass(str, Enum):
    INCOMPLETE_DATA = "incomplete_data"
    CHUNK_RETRIEVAL_PRECISION = "chunk_retrieval_precision"
    CHUNK_RETRIEVAL_RECALL = "chunk_retrieval_recall"
    DATA_ACCESS = "data_access"
    INADEQUATE_CHUNKING = "inadequate_chunking"
    UNKNOWN_VOCAB_EMBEDDER = "unknown_vocab_embedder"
    PRIOR_KNOWLEDGE_ANSWER = "prior_knowledge_answer"
    INADEQUATE_RELEVANCE = "inadequate_relevance"
    UNKNOWN_VOCAB_LM = "unknown_vocab_lm"
    LACK_LOGICAL_COHERENCE = "lack_logical_coherence"
    INCONSISTENCY = "inconsistency"
    IMPROPER_FORMAT = "improper_format"


@dataclass(frozen=True)
class CorrectiveAction:
    description: str
    automatable: bool = False
    config_patch: dict | None = None


@dataclass(frozen=True)
class CatalogRow:
    issue: IssueClass
    stage: str  # "retrieval" | "generation"
    diagnostic_question: str
    metric: str | None  # None -> manual analysis
    actions: tuple[CorrectiveAction, ...]


CATALOG: dict[IssueClass, CatalogRow] = {
    row.issue: row
    for row in (
        CatalogRow(
            IssueClass.INCOMPLETE_DATA,
            "retrieval",
            "Are the data required to answer present in the documents?",
            None,
            (
                CorrectiveAction("Complete the data"),
                CorrectiveAction("Add new data sources"),
            ),
        ),
        CatalogRow(
            IssueClass.CHUNK_RETRIEVAL_PRECISION,
            "retrieval",
            "Are all retrieved chunks relevant?",
            "context_precision",
            (
                CorrectiveAction(
                    "Reduce the amount of context (quantity or size of retrieved chunks)",
                    automatable=True,
                    config_patch={
                        "retrieval": {"k_dense": 2, "k_sparse": 2, "context_budget_tokens": 2000}
                    },
                ),
                CorrectiveAction("revise the vectorisation method"),
            ),
        ),
        CatalogRow(
            IssueClass.CHUNK_RETRIEVAL_RECALL,
            "retrieval",
            "Are all relevant chunks present?",
            "context_recall",
            (
                CorrectiveAction(
                    "Increase the amount of context",
                    automatable=True,
                    config_patch={"retrieval": {"k_dense": 5, "k_sparse": 5}},
                ),
                CorrectiveAction("revise the vectorisation method"),
                CorrectiveAction("use reranking strategies"),
                CorrectiveAction("add child-parent retrieval"),
            ),
        ),
        CatalogRow(
            IssueClass.DATA_ACCESS,
            "retrieval",
            "Is the information accessible to the tool? (table, image)",
            None,
            (
                CorrectiveAction("Implement multimodal RAG systems"),
                CorrectiveAction("use an agent model capable of executing machine-readable actions"),
                CorrectiveAction(
                    "Preprocess tabular sources into one chunk per row with column-header prefixes",
                    automatable=True,
                    config_patch={"chunking": "auto"},
                ),
            ),
        ),
        CatalogRow(
            IssueClass.INADEQUATE_CHUNKING,
            "retrieval",
            "Is any excerpt split in two during chunking?",
            None,
            (
                CorrectiveAction(
                    "Add overlap",
                    automatable=True,
                    config_patch={
                        "chunking": {"strategy": "fixed", "size_tokens": 1000, "overlap_tokens": 100}
                    },
                ),
                CorrectiveAction(
                    "revise chunking strategy",
                    automatable=True,
                    config_patch={"chunking": "auto"},
                ),
                CorrectiveAction("consider hybrid chunking approaches"),
                CorrectiveAction("implement child-parent retrieval"),
            ),
        ),
        CatalogRow(
            IssueClass.UNKNOWN_VOCAB_EMBEDDER,
            "retrieval",
            "Are there terms unknown to the vectoriser model?",
            None,
            (
                CorrectiveAction(
                    "Integrate sparse vectorisation techniques",
                    automatable=True,
                    config_patch={"retrieval": {"mode": "hybrid"}},
                ),
                CorrectiveAction("employ a synonym dictionary to expand vocabulary coverage"),
            ),
        ),
        CatalogRow(
            IssueClass.PRIOR_KNOWLEDGE_ANSWER,
            "generation",
            "Did the model respond using prior knowledge?",
            "faithfulness",
            (
                CorrectiveAction(
                    "Apply grounding techniques within the prompt",
                    automatable=True,
                    config_patch={"prompt": {"grounding": True}},
                ),
                CorrectiveAction(
                    "incorporate a fact-checking step prior to returning a response to the user"
                ),
            ),
        ),
        CatalogRow(
            IssueClass.INADEQUATE_RELEVANCE,
            "generation",
            "Did the answer address the question?",
            "answer_relevance",
            (
                CorrectiveAction("Use a LM to reformulate the query"),
                CorrectiveAction("generate multiple answers and pick best one based on answer relevance"),
            ),
        ),
        CatalogRow(
            IssueClass.UNKNOWN_VOCAB_LM,
            "generation",
            "Are there terms unknown to the language model?",
            None,
            (
                CorrectiveAction(
                    "Include relevant vocabulary lists directly in the prompt to enhance the model's understanding"
                ),
            ),
        ),
        CatalogRow(
            IssueClass.LACK_LOGICAL_COHERENCE,
            "generation",
            "Did the LM lack the logic in the provided elements?",
            None,
            (
                CorrectiveAction(
                    "Utilise structured prompting techniques (CoT, Least-to-Most prompting, Plan-and-Solve)",
                    automatable=True,
                    config_patch={"prompt": {"step_by_step": True}},
                ),
            ),
        ),
        CatalogRow(
            IssueClass.INCONSISTENCY,
            "generation",
            "Is the quality of the obtained response repeatable?",
            "prompt_agreement",
            (
                CorrectiveAction(
                    "Reduce the LM temperature",
                    automatable=True,
                    config_patch={"lm": {"temperature": 0.0}},
                ),
                CorrectiveAction("refine prompt"),
                CorrectiveAction("generate multiple answers and keep the most frequent one"),
            ),
        ),
        CatalogRow(
            IssueClass.IMPROPER_FORMAT,
            "generation",
            "Is the style or format of the response appropriate?",
            None,
            (
                CorrectiveAction("Refine prompt to specify the desired format"),
                CorrectiveAction("provide examples of expected answers"),
            ),
        ),
    )
}


@dataclass(frozen=True)
class DiagnosticThresholds:
    min_precision: float = 0.5
    min_recall: float = 1.0
    min_faithfulness: float = 0.7
    min_relevance: float = 0.6
    min_agreement: float = 0.8


@dataclass(frozen=True)
class IssueFinding:
    query_id: str
    issue: IssueClass
    origin: str  # "automatic" | "manual"
    evidence: str


_THRESHOLD_RULES = (
    ("context_precision", "min_precision", IssueClass.CHUNK_RETRIEVAL_PRECISION),
    ("context_recall", "min_recall", IssueClass.CHUNK_RETRIEVAL_RECALL),
    ("faithfulness", "min_faithfulness", IssueClass.PRIOR_KNOWLEDGE_ANSWER),
    ("answer_relevance", "min_relevance", IssueClass.INADEQUATE_RELEVANCE),
    ("prompt_agreement", "min_agreement", IssueClass.INCONSISTENCY),
)


def auto_diagnose(record, tq=None, thresholds: DiagnosticThresholds = DiagnosticThresholds()) -> list[IssueFinding]:
    """Threshold findings for one failing query record.

    Only metrics that were measured contribute; a metric that is not
    applicable to the query (None) never produces a finding.  Several
    findings per query are normal.
    """
    if record.verdict == Verdict.CORRECT:
        raise ValueError(f"{record.query_id}: auto_diagnose expects a non-correct record")
    findings = []
    for metric_name, threshold_name, issue in _THRESHOLD_RULES:
        value = getattr(record, metric_name)
        if value is None:
            continue
        threshold = getattr(thresholds, threshold_name)
        if value < threshold:
            findings.append(
                IssueFinding(
                    query_id=record.query_id,
                    issue=issue,
                    origin="automatic",
                    evidence=f"{metric_name}={value:.3f} < {threshold}",
                )
            )
    return findings


def record_manual_finding(
    run: EvaluationRun,
    query_id: str,
    issue: IssueClass,
    note: str,
    store_path: str | Path | None = None,
) -> IssueFinding:
    """Store a reviewer-entered finding for a query in the run."""
    if not any(r.query_id == query_id for r in run.records):
        raise UnknownQuery(query_id)
    finding = IssueFinding(query_id=query_id, issue=IssueClass(issue), origin="manual", evidence=note)
    if store_path is not None:
        append_finding(finding, store_path)
    return finding


def recommend(issue: IssueClass) -> list[CorrectiveAction]:
    """Corrective actions for an issue, most standard first."""
    return list(CATALOG[IssueClass(issue)].actions)


# ---------------------------------------------------------------------------
# Pareto ranking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParetoEntry:
    issue: IssueClass
    count: int
    cumulative_fraction: float


@dataclass(frozen=True)
class ParetoReport:
    entries: tuple[ParetoEntry, ...]
    total_findings: int
    total_failing_queries: int

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"issue": e.issue.value, "count": e.count, "cumulative_fraction": e.cumulative_fraction}
                for e in self.entries
            ],
            "total_findings": self.total_findings,
            "total_failing_queries": self.total_failing_queries,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ParetoReport":
        return cls(
            entries=tuple(
                ParetoEntry(IssueClass(e["issue"]), e["count"], e["cumulative_fraction"])
                for e in raw["entries"]
            ),
            total_findings=raw["total_findings"],
            total_failing_queries=raw["total_failing_queries"],
        )


def pareto(findings: list[IssueFinding]) -> ParetoReport:
    """Rank issues by frequency; ties break on issue name.

    Cumulative fractions run over the finding count, which may exceed the
    number of distinct failing queries when queries carry multiple issues.
    """
    counts: dict[IssueClass, int] = {}
    for finding in findings:
        counts[finding.issue] = counts.get(finding.issue, 0) + 1
    total = sum(counts.values())
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0].value))
    entries = []
    running = 0
    for issue, count in ordered:
        running += count
        entries.append(ParetoEntry(issue, count, running / total))
    return ParetoReport(
        entries=tuple(entries),
        total_findings=total,
        total_failing_queries=len({f.query_id for f in findings}),
    )


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

def diagnosis_report(
    run: EvaluationRun,
    findings: list[IssueFinding],
    targets: Targets = Targets(),
) -> dict:
    """Structured report: target gate, Pareto table, actions, evidence."""
    target_report = check_targets(run, targets)
    pareto_report = pareto(findings)
    issues = []
    for entry in pareto_report.entries:
        row = CATALOG[entry.issue]
        issues.append(
            {
                "issue": entry.issue.value,
                "count": entry.count,
                "cumulative_fraction": entry.cumulative_fraction,
                "diagnostic_question": row.diagnostic_question,
                "metric": row.metric,
                "actions": [
                    {
                        "description": a.description,
                        "automatable": a.automatable,
                        "config_patch": a.config_patch,
                    }
                    for a in row.actions
                ],
                "queries": [
                    {"query_id": f.query_id, "origin": f.origin, "evidence": f.evidence}
                    for f in findings
                    if f.issue == entry.issue
                ],
            }
        )
    return {
        "run_id": run.run_id,
        "config_version": run.config_version,
        "targets": {
            "pass": target_report.passed,
            "violations": list(target_report.violations),
        },
        "pareto": pareto_report.to_dict(),
        "issues": issues,
    }


def render_report_text(report: dict) -> str:
    """Plain-text rendering of a diagnosis report."""
    lines = [
        f"Diagnosis report for {report['run_id']} (config {report['config_version']})",
        f"Targets: {'PASS' if report['targets']['pass'] else 'FAIL'}",
    ]
    for violation in report["targets"]["violations"]:
        lines.append(
            f"  violated: {violation['criterion']} = {violation['value']:.3f}"
            f" (target {violation['relation']} {violation['limit']})"
        )
    pareto_block = report["pareto"]
    lines.append(
        f"Findings: {pareto_block['total_findings']} across "
        f"{pareto_block['total_failing_queries']} failing queries"
    )
    for issue in report["issues"]:
        lines.append(
            f"  {issue['issue']}: {issue['count']} "
            f"(cum {issue['cumulative_fraction']:.0%}) - {issue['diagnostic_question']}"
        )
        for action in issue["actions"]:
            marker = "*" if action["automatable"] else "-"
            lines.append(f"      {marker} {action['description']}")
    if not report["issues"]:
        lines.append("  none")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Findings persistence (JSONL, append-only)
# ---------------------------------------------------------------------------

def append_finding(finding: IssueFinding, path: str | Path) -> None:
    line = json.dumps(
        {
            "query_id": finding.query_id,
            "issue": finding.issue.value,
            "origin": finding.origin,
            "evidence": finding.evidence,
        }
    )
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")


def load_findings(path: str | Path) -> list[IssueFinding]:
    findings = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        findings.append(
            IssueFinding(
                query_id=raw["query_id"],
                issue=IssueClass(raw["issue"]),
                origin=raw["origin"],
                evidence=raw["evidence"],
            )
        )
    return findings
