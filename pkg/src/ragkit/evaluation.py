"""Evaluation protocol: run a gold-annotated test set, score five metrics,
classify verdicts, and check aggregate targets.

Metrics return None where they do not apply (e.g. recall on a question
with no gold chunks); inapplicable values are excluded from means but the
record still counts toward the run.  Verdict classification is rule-based
(must-contain / must-not-contain / uncertainty patterns) so the suite is
deterministic; an LM judge can sit behind the same operations.
"""

from __future__ import annotations

import json
import re
import time
import uuid
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import JudgeFailure
from .generation import LMConfig, generate
from .retrieval import CHUNK_SEPARATOR, cosine
from .tokens import index_terms

_SENTENCE_SPLIT_RE = re.compile(r"[.!?\n]+")

DEFAULT_UNCERTAINTY_PATTERNS = (
    "i don't know",
    "i do not know",
    "don't have enough information",
    "does not contain enough information",
    "not enough information",
    "no information",
    "cannot answer",
    "can't answer",
    "unable to answer",
    "not specified in the provided",
    "not mentioned in the provided",
)

REVERSE_QUESTION_TEMPLATE = "Write one question that is answered by the following answer: {answer}"


class Verdict(str, Enum):
    CORRECT = "correct"
    ACCEPTABLE = "acceptable"
    INCORRECT = "incorrect"


@dataclass(frozen=True)
class TestQuery:
    __test__ = False  # not a pytest class, despite the name

    query_id: str
    question: str
    expected_answer: str | None = None
    gold_chunk_ids: frozenset[str] = frozenset()
    must_contain: tuple[str, ...] = ()
    must_not_contain: tuple[str, ...] = ()

    @property
    def answerable(self) -> bool:
        return bool(self.gold_chunk_ids)


@dataclass
class QueryRecord:
    query_id: str
    retrieved_ids: list[str]
    answer: str
    latency: float
    cost: float
    verdict: Verdict
    contradiction: bool
    context_precision: float | None = None
    context_recall: float | None = None
    faithfulness: float | None = None
    answer_relevance: float | None = None
    prompt_agreement: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class Targets:
    min_correct_rate: float = 0.80
    max_acceptable_rate: float = 0.20
    max_contradictions: int = 0
    max_latency: float = 5.0


@dataclass
class EvaluationRun:
    run_id: str
    config_version: str
    records: list[QueryRecord]
    aggregates: dict[str, float]


METRIC_FIELDS = (
    "context_precision",
    "context_recall",
    "faithfulness",
    "answer_relevance",
    "prompt_agreement",
)


# ---------------------------------------------------------------------------
# Retrieval metrics
# ---------------------------------------------------------------------------

def context_precision(retrieved_ids, gold_chunk_ids) -> float | None:
    """Fraction of retrieved chunks that are gold; None when either side is empty."""
    retrieved = set(retrieved_ids)
    gold = set(gold_chunk_ids)
    if not gold or not retrieved:
        return None
    return len(retrieved & gold) / len(retrieved)


def context_recall(retrieved_ids, gold_chunk_ids) -> float | None:
    """Fraction of gold chunks that were retrieved; None when gold is empty."""
    gold = set(gold_chunk_ids)
    if not gold:
        return None
    return len(set(retrieved_ids) & gold) / len(gold)


# ---------------------------------------------------------------------------
# Generation metrics
# ---------------------------------------------------------------------------

def _sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT_RE.split(text) if s.strip()]


def faithfulness(answer: str, context_text: str, judge: LMConfig | None = None) -> float | None:
    """Fraction of answer sentences supported by the retrieved context.

    Lexical mode (default): a sentence is supported when at least half of
    its index terms occur within a single retrieved chunk's text (chunks
    recovered by splitting the context block on its separator).  Judge
    mode asks the given LM per sentence instead.  Sentences without index
    terms carry no checkable claim; an answer made only of those (or an
    empty answer) is not applicable.
    """
    sentences = _sentences(answer)
    if not sentences:
        return None
    if judge is not None:
        return _judged_faithfulness(sentences, context_text, judge)

    chunk_term_sets = [set(index_terms(part)) for part in context_text.split(CHUNK_SEPARATOR)]
    supported = 0
    counted = 0
    for sentence in sentences:
        terms = set(index_terms(sentence))
        if not terms:
            continue
        counted += 1
        needed = 0.5 * len(terms)
        if any(len(terms & chunk_terms) >= needed for chunk_terms in chunk_term_sets):
            supported += 1
    if counted == 0:
        return None
    return supported / counted


def _judged_faithfulness(sentences: list[str], context_text: str, judge: LMConfig) -> float:
    yes = 0
    for sentence in sentences:
        prompt = (
            f"Context:\n{context_text}\n\nStatement: {sentence}\n"
            "Is the statement supported by the context? Answer yes or no."
        )
        try:
            result = generate(judge, prompt)
        except Exception as exc:
            raise JudgeFailure(str(exc)) from exc
        if result.answer.strip().lower().startswith("yes"):
            yes += 1
    return yes / len(sentences)


def answer_relevance(answer: str, question: str, lm: LMConfig, embedder, m: int = 3) -> float:
    """Similarity between the question and questions reverse-generated
    from the answer; each cosine is clamped to [0, 1] before averaging."""
    if not answer:
        raise ValueError("answer must be non-empty")
    prompt = REVERSE_QUESTION_TEMPLATE.replace("{answer}", answer)
    question_vec = embedder.embed([question])[0]
    total = 0.0
    for _ in range(m):
        generated = generate(lm, prompt).answer
        sim = cosine(embedder.embed([generated])[0], question_vec)
        total += min(1.0, max(0.0, sim))
    return total / m


def prompt_agreement(question: str, pipeline, n: int = 3) -> float:
    """Mean pairwise Jaccard similarity of answer term sets over n runs.

    Identical answer strings always count as fully agreeing, term-bearing
    or not.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    answers = [pipeline.run_query(question).answer for _ in range(n)]
    term_sets = [set(index_terms(a)) for a in answers]
    total = 0.0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            pairs += 1
            if answers[i] == answers[j]:
                total += 1.0
                continue
            union = term_sets[i] | term_sets[j]
            total += len(term_sets[i] & term_sets[j]) / len(union) if union else 1.0
    return total / pairs


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

def is_uncertainty_statement(answer: str, patterns=DEFAULT_UNCERTAINTY_PATTERNS) -> bool:
    lowered = answer.lower()
    return any(p in lowered for p in patterns)


def classify_verdict(
    answer: str,
    tq: TestQuery,
    uncertainty_patterns=DEFAULT_UNCERTAINTY_PATTERNS,
) -> tuple[Verdict, bool]:
    """Rule-based verdict for one answer.

    Answerable questions: a must-not-contain marker makes the answer an
    incorrect contradiction; all must-contain elements present is correct;
    some present, or an explicit uncertainty statement, is acceptable;
    otherwise incorrect.  Unanswerable questions: an uncertainty statement
    is the correct behavior, any substantive answer is incorrect (still a
    contradiction when it hits a marker).
    """
    lowered = answer.lower()
    hit_marker = any(marker.lower() in lowered for marker in tq.must_not_contain)
    uncertain = is_uncertainty_statement(answer, uncertainty_patterns)

    if not tq.answerable:
        if uncertain and not hit_marker:
            return Verdict.CORRECT, False
        return Verdict.INCORRECT, hit_marker

    if hit_marker:
        return Verdict.INCORRECT, True
    present = [m for m in tq.must_contain if m.lower() in lowered]
    if len(present) == len(tq.must_contain):
        return Verdict.CORRECT, False
    if present or uncertain:
        return Verdict.ACCEPTABLE, False
    return Verdict.INCORRECT, False


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

def evaluate_run(
    pipeline,
    testset: list[TestQuery],
    n_agreement: int = 0,
    compute_relevance: bool = False,
    uncertainty_patterns=DEFAULT_UNCERTAINTY_PATTERNS,
) -> EvaluationRun:
    """Run every test query through the pipeline and score it.

    A query that errors inside the pipeline is recorded as incorrect with
    the error message; the run always completes.  Aggregates are
    recomputable from the records.
    """
    if not testset:
        raise ValueError("testset must be non-empty")
    records: list[QueryRecord] = []
    for tq in testset:
        try:
            outcome = pipeline.run_query(tq.question)
        except Exception as exc:
            records.append(
                QueryRecord(
                    query_id=tq.query_id,
                    retrieved_ids=[],
                    answer="",
                    latency=0.0,
                    cost=0.0,
                    verdict=Verdict.INCORRECT,
                    contradiction=False,
                    error=str(exc),
                )
            )
            continue

        verdict, contradiction = classify_verdict(outcome.answer, tq, uncertainty_patterns)
        record = QueryRecord(
            query_id=tq.query_id,
            retrieved_ids=list(outcome.retrieved_ids),
            answer=outcome.answer,
            latency=outcome.latency,
            cost=outcome.cost,
            verdict=verdict,
            contradiction=contradiction,
            context_precision=context_precision(outcome.retrieved_ids, tq.gold_chunk_ids),
            context_recall=context_recall(outcome.retrieved_ids, tq.gold_chunk_ids),
            faithfulness=faithfulness(outcome.answer, outcome.context_text),
        )
        if compute_relevance and outcome.answer:
            record.answer_relevance = answer_relevance(
                outcome.answer, tq.question, pipeline.lm_config, pipeline.embedder
            )
        if n_agreement >= 2:
            record.prompt_agreement = prompt_agreement(tq.question, pipeline, n_agreement)
        records.append(record)

    return EvaluationRun(
        run_id=f"run-{time.strftime('%Y%m%dT%H%M%S')}-{uuid.uuid4().hex[:6]}",
        config_version=getattr(pipeline, "config_version", "unversioned"),
        records=records,
        aggregates=compute_aggregates(records),
    )


def compute_aggregates(records: list[QueryRecord]) -> dict[str, float]:
    n = len(records)
    counts = {v: sum(1 for r in records if r.verdict == v) for v in Verdict}
    aggregates = {
        "correct_rate": counts[Verdict.CORRECT] / n,
        "acceptable_rate": counts[Verdict.ACCEPTABLE] / n,
        "incorrect_rate": counts[Verdict.INCORRECT] / n,
        "contradiction_count": float(sum(1 for r in records if r.contradiction)),
        "mean_latency": sum(r.latency for r in records) / n,
        "total_cost": sum(r.cost for r in records),
    }
    for name in METRIC_FIELDS:
        values = [getattr(r, name) for r in records if getattr(r, name) is not None]
        if values:
            aggregates[f"mean_{name}"] = sum(values) / len(values)
    return aggregates


@dataclass(frozen=True)
class TargetReport:
    passed: bool
    violations: tuple[dict, ...]


def check_targets(run: EvaluationRun, targets: Targets = Targets()) -> TargetReport:
    """Strict-inequality gate on correct/acceptable rates, zero tolerance
    on contradictions, and a mean-latency ceiling."""
    if not run.records:
        raise ValueError("run has no records")
    agg = run.aggregates
    violations = []
    if not agg["correct_rate"] > targets.min_correct_rate:
        violations.append(
            {"criterion": "correct_rate", "value": agg["correct_rate"],
             "limit": targets.min_correct_rate, "relation": ">"}
        )
    if not agg["acceptable_rate"] < targets.max_acceptable_rate:
        violations.append(
            {"criterion": "acceptable_rate", "value": agg["acceptable_rate"],
             "limit": targets.max_acceptable_rate, "relation": "<"}
        )
    if agg["contradiction_count"] > targets.max_contradictions:
        violations.append(
            {"criterion": "contradiction_count", "value": agg["contradiction_count"],
             "limit": targets.max_contradictions, "relation": "<="}
        )
    if agg["mean_latency"] > targets.max_latency:
        violations.append(
            {"criterion": "mean_latency", "value": agg["mean_latency"],
             "limit": targets.max_latency, "relation": "<="}
        )
    return TargetReport(passed=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def load_testset(path: str | Path) -> list[TestQuery]:
    """Read a JSONL test set; answerable follows from non-empty gold ids."""
    queries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        queries.append(
            TestQuery(
                query_id=raw["query_id"],
                question=raw["question"],
                expected_answer=raw.get("expected_answer"),
                gold_chunk_ids=frozenset(raw.get("gold_chunk_ids", [])),
                must_contain=tuple(raw.get("must_contain", [])),
                must_not_contain=tuple(raw.get("must_not_contain", [])),
            )
        )
    return queries


def record_to_dict(record: QueryRecord) -> dict:
    out = {
        "query_id": record.query_id,
        "retrieved_ids": list(record.retrieved_ids),
        "answer": record.answer,
        "latency": record.latency,
        "cost": record.cost,
        "verdict": record.verdict.value,
        "contradiction": record.contradiction,
        "error": record.error,
    }
    for name in METRIC_FIELDS:
        out[name] = getattr(record, name)
    return out


def record_from_dict(raw: dict) -> QueryRecord:
    return QueryRecord(
        query_id=raw["query_id"],
        retrieved_ids=list(raw["retrieved_ids"]),
        answer=raw["answer"],
        latency=raw["latency"],
        cost=raw["cost"],
        verdict=Verdict(raw["verdict"]),
        contradiction=raw["contradiction"],
        error=raw.get("error"),
        **{name: raw.get(name) for name in METRIC_FIELDS},
    )


def run_to_dict(run: EvaluationRun) -> dict:
    return {
        "run_id": run.run_id,
        "config_version": run.config_version,
        "records": [record_to_dict(r) for r in run.records],
        "aggregates": dict(run.aggregates),
    }


def run_from_dict(raw: dict) -> EvaluationRun:
    return EvaluationRun(
        run_id=raw["run_id"],
        config_version=raw["config_version"],
        records=[record_from_dict(r) for r in raw["records"]],
        aggregates=dict(raw["aggregates"]),
    )


def save_run(run: EvaluationRun, path: str | Path) -> None:
    Path(path).write_text(json.dumps(run_to_dict(run), indent=2), encoding="utf-8")


def load_run(path: str | Path) -> EvaluationRun:
    return run_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
