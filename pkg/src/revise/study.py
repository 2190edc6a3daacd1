"""Persistence and aggregation for the two-stage annotation study.

Everything lands in one append-only JSON-lines event log: sessions,
annotations, evaluations, and raw edit events, each line tagged with a type
and an ISO-8601 timestamp. The latest record wins per logical key (an
annotator re-saving a document replaces the earlier annotation). Aggregates
reproduce the study-summary table: per-variant editing time, ratings,
verdict distribution, and binary-issue rates.
"""

from __future__ import annotations

import json
import os
import random
import statistics
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence

TASK_WITH = "with_interaction"
TASK_WITHOUT = "without_interaction"
TASK_EVALUATION = "evaluation"
TASKS = (TASK_WITH, TASK_WITHOUT, TASK_EVALUATION)

VARIANT_DRAFT = "draft"
VARIANT_NO_INTERACTION = "human_no_interaction"
VARIANT_WITH_INTERACTION = "human_with_interaction"
VARIANTS = (VARIANT_DRAFT, VARIANT_NO_INTERACTION, VARIANT_WITH_INTERACTION)

VERDICT_ACCEPT = "accept"
VERDICT_ACCEPT_WITH_EDITS = "accept_with_edits"
VERDICT_REJECT = "reject"
VERDICTS = (VERDICT_ACCEPT, VERDICT_ACCEPT_WITH_EDITS, VERDICT_REJECT)

N_ISSUES = 7
# Issue 1 (index 0) is hallucination; its rate is the headline table column.
DEFAULT_ISSUE_QUESTIONS = (
    "Does the summary add or make up information not supported by the document?",
    "Does the summary miss key content of the document?",
    "Is the summary redundant or too verbose?",
    "Is the summary incoherent or not fluent as a short passage?",
    "Does the summary contain grammar errors?",
    "Does the summary use the wrong narrative perspective?",
    "Is the summary too generic to be informative?",
)

RATING_MIN = 1
RATING_MAX = 7


class StudyError(Exception):
    """Base class for study-store problems."""


class RecordValidationError(StudyError):
    """A record violates its type invariants; names the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


class StorageError(StudyError):
    """I/O failure or corrupt log content, distinct from validation."""


@dataclass(frozen=True)
class Session:
    id: str
    annotator_id: str
    task: str
    document_ids: tuple

    def validate(self):
        if not self.id:
            raise RecordValidationError("id", "must be non-empty")
        if not self.annotator_id:
            raise RecordValidationError("annotator_id", "must be non-empty")
        if self.task not in TASKS:
            raise RecordValidationError("task", f"must be one of {TASKS}")
        if len(set(self.document_ids)) != len(self.document_ids):
            raise RecordValidationError("document_ids", "must not repeat")


@dataclass(frozen=True)
class AnnotationRecord:
    session_id: str
    document_id: str
    draft_summary: str
    final_summary: str
    elapsed_ms: int
    suggestion_triggers: int = 0
    choices_taken: tuple = ()
    client_active_ms: Optional[int] = None

    def validate(self):
        if not self.session_id:
            raise RecordValidationError("session_id", "must be non-empty")
        if not self.document_id:
            raise RecordValidationError("document_id", "must be non-empty")
        if self.elapsed_ms < 0:
            raise RecordValidationError("elapsed_ms", "must be >= 0")
        if self.suggestion_triggers < 0:
            raise RecordValidationError("suggestion_triggers", "must be >= 0")
        if self.suggestion_triggers < len(self.choices_taken):
            raise RecordValidationError(
                "suggestion_triggers", "must be >= number of choices taken"
            )
        for pair in self.choices_taken:
            if len(tuple(pair)) != 2:
                raise RecordValidationError(
                    "choices_taken", "entries must be (trigger index, choice index)"
                )


@dataclass(frozen=True)
class EvaluationRecord:
    session_id: str
    document_id: str
    summary_variant: str
    rating: int
    issues: tuple
    verdict: str

    def validate(self):
        if not self.session_id:
            raise RecordValidationError("session_id", "must be non-empty")
        if not self.document_id:
            raise RecordValidationError("document_id", "must be non-empty")
        if self.summary_variant not in VARIANTS:
            raise RecordValidationError(
                "summary_variant", f"must be one of {VARIANTS}"
            )
        if not isinstance(self.rating, int) or isinstance(self.rating, bool):
            raise RecordValidationError("rating", "must be an integer")
        if not RATING_MIN <= self.rating <= RATING_MAX:
            raise RecordValidationError(
                "rating", f"must be in [{RATING_MIN}, {RATING_MAX}]"
            )
        if len(self.issues) != N_ISSUES or any(
            not isinstance(v, bool) for v in self.issues
        ):
            raise RecordValidationError("issues", f"must be exactly {N_ISSUES} booleans")
        if self.verdict not in VERDICTS:
            raise RecordValidationError("verdict", f"must be one of {VERDICTS}")


@dataclass(frozen=True)
class EditEventRecord:
    """Raw interaction trace (suggestion trigger, choice adoption, ...)."""

    session_id: str
    document_id: str
    kind: str
    data: dict = field(default_factory=dict)

    def validate(self):
        if not self.session_id:
            raise RecordValidationError("session_id", "must be non-empty")
        if not self.kind:
            raise RecordValidationError("kind", "must be non-empty")


_TYPE_TAGS = {
    Session: "session",
    AnnotationRecord: "annotation",
    EvaluationRecord: "evaluation",
    EditEventRecord: "edit_event",
}


def _record_to_obj(record) -> dict:
    tag = _TYPE_TAGS[type(record)]
    if isinstance(record, Session):
        body = {
            "id": record.id,
            "annotator_id": record.annotator_id,
            "task": record.task,
            "document_ids": list(record.document_ids),
        }
    elif isinstance(record, AnnotationRecord):
        body = {
            "session_id": record.session_id,
            "document_id": record.document_id,
            "draft_summary": record.draft_summary,
            "final_summary": record.final_summary,
            "elapsed_ms": record.elapsed_ms,
            "suggestion_triggers": record.suggestion_triggers,
            "choices_taken": [list(p) for p in record.choices_taken],
            "client_active_ms": record.client_active_ms,
        }
    elif isinstance(record, EvaluationRecord):
        body = {
            "session_id": record.session_id,
            "document_id": record.document_id,
            "summary_variant": record.summary_variant,
            "rating": record.rating,
            "issues": list(record.issues),
            "verdict": record.verdict,
        }
    else:
        body = {
            "session_id": record.session_id,
            "document_id": record.document_id,
            "kind": record.kind,
            "data": record.data,
        }
    body["type"] = tag
    return body


def _obj_to_record(obj: dict):
    tag = obj.get("type")
    try:
        if tag == "session":
            return Session(
                id=obj["id"],
                annotator_id=obj["annotator_id"],
                task=obj["task"],
                document_ids=tuple(obj["document_ids"]),
            )
        if tag == "annotation":
            return AnnotationRecord(
                session_id=obj["session_id"],
                document_id=obj["document_id"],
                draft_summary=obj["draft_summary"],
                final_summary=obj["final_summary"],
                elapsed_ms=int(obj["elapsed_ms"]),
                suggestion_triggers=int(obj.get("suggestion_triggers", 0)),
                choices_taken=tuple(tuple(p) for p in obj.get("choices_taken", [])),
                client_active_ms=obj.get("client_active_ms"),
            )
        if tag == "evaluation":
            return EvaluationRecord(
                session_id=obj["session_id"],
                document_id=obj["document_id"],
                summary_variant=obj["summary_variant"],
                rating=obj["rating"],
                issues=tuple(bool(v) for v in obj["issues"]),
                verdict=obj["verdict"],
            )
        if tag == "edit_event":
            return EditEventRecord(
                session_id=obj["session_id"],
                document_id=obj["document_id"],
                kind=obj["kind"],
                data=obj.get("data", {}),
            )
    except KeyError as exc:
        raise StorageError(f"missing field {exc} in {tag!r} record") from exc
    raise StorageError(f"unknown record type {tag!r}")


class EventLog:
    """Append-only JSON-lines store with latest-wins materialization.

    Appends are serialized by a lock and fsynced, so a 2xx acknowledgment
    implies the record is durable. Re-reading the log reproduces every
    record in order.
    """

    def __init__(self, path):
        self.path = os.fspath(path)
        self._lock = threading.Lock()

    def append(self, record) -> None:
        validate = getattr(record, "validate", None)
        if validate is None:
            raise RecordValidationError("type", f"unsupported record {type(record)!r}")
        validate()
        obj = _record_to_obj(record)
        obj["ts"] = datetime.now(timezone.utc).isoformat()
        line = json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n"
        with self._lock:
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"cannot append to {self.path}: {exc}") from exc

    def records(self) -> list:
        """All records in append order; tolerates a missing (empty) log."""
        if not os.path.exists(self.path):
            return []
        out = []
        try:
            with open(self.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        out.append(_obj_to_record(json.loads(line)))
                    except (json.JSONDecodeError, StorageError) as exc:
                        raise StorageError(f"line {lineno}: {exc}") from exc
        except OSError as exc:
            raise StorageError(f"cannot read {self.path}: {exc}") from exc
        return out


@dataclass
class MaterializedLog:
    sessions: dict
    annotations: dict  # (session_id, document_id) -> AnnotationRecord, latest wins
    evaluations: dict  # (session_id, document_id, variant) -> EvaluationRecord
    edit_events: list


def materialize(records: Sequence) -> MaterializedLog:
    sessions: dict = {}
    annotations: dict = {}
    evaluations: dict = {}
    edit_events: list = []
    for record in records:
        if isinstance(record, Session):
            sessions[record.id] = record
        elif isinstance(record, AnnotationRecord):
            annotations[(record.session_id, record.document_id)] = record
        elif isinstance(record, EvaluationRecord):
            evaluations[
                (record.session_id, record.document_id, record.summary_variant)
            ] = record
        else:
            edit_events.append(record)
    return MaterializedLog(
        sessions=sessions,
        annotations=annotations,
        evaluations=evaluations,
        edit_events=edit_events,
    )


@dataclass(frozen=True)
class VariantAggregate:
    n_annotations: int
    avg_time_s: Optional[float]
    std_time_s: Optional[float]
    avg_triggers: Optional[float]
    n_evaluations: int
    avg_rating: Optional[float]
    std_rating: Optional[float]
    verdicts: dict
    issue_rates: tuple
    hallucination_rate: Optional[float]


@dataclass(frozen=True)
class StudyAggregate:
    variants: dict
    n_records: int

    def to_obj(self) -> dict:
        out = {"n_records": self.n_records, "variants": {}}
        for name, agg in self.variants.items():
            out["variants"][name] = {
                "n_annotations": agg.n_annotations,
                "avg_time_s": agg.avg_time_s,
                "std_time_s": agg.std_time_s,
                "avg_triggers": agg.avg_triggers,
                "n_evaluations": agg.n_evaluations,
                "avg_rating": agg.avg_rating,
                "std_rating": agg.std_rating,
                "verdicts": agg.verdicts,
                "issue_rates": list(agg.issue_rates),
                "hallucination_rate": agg.hallucination_rate,
            }
        return out


_TASK_TO_VARIANT = {
    TASK_WITH: VARIANT_WITH_INTERACTION,
    TASK_WITHOUT: VARIANT_NO_INTERACTION,
}


def aggregate(log: EventLog) -> StudyAggregate:
    """Per-variant study statistics; empty variants are absent, not zero."""
    records = log.records()
    mat = materialize(records)

    times: dict[str, list[float]] = {}
    triggers: dict[str, list[int]] = {}
    for (session_id, _), annotation in mat.annotations.items():
        session = mat.sessions.get(session_id)
        if session is None or session.task not in _TASK_TO_VARIANT:
            continue
        variant = _TASK_TO_VARIANT[session.task]
        times.setdefault(variant, []).append(annotation.elapsed_ms / 1000.0)
        triggers.setdefault(variant, []).append(annotation.suggestion_triggers)

    ratings: dict[str, list[int]] = {}
    verdicts: dict[str, list[str]] = {}
    issues: dict[str, list[tuple]] = {}
    for (_, _, variant), evaluation in mat.evaluations.items():
        ratings.setdefault(variant, []).append(evaluation.rating)
        verdicts.setdefault(variant, []).append(evaluation.verdict)
        issues.setdefault(variant, []).append(evaluation.issues)

    variants: dict[str, VariantAggregate] = {}
    for variant in VARIANTS:
        variant_times = times.get(variant, [])
        variant_ratings = ratings.get(variant, [])
        if not variant_times and not variant_ratings:
            continue
        verdict_list = verdicts.get(variant, [])
        n_eval = len(variant_ratings)
        verdict_fracs = (
            {v: verdict_list.count(v) / n_eval for v in VERDICTS} if n_eval else {}
        )
        issue_list = issues.get(variant, [])
        issue_rates = tuple(
            sum(flags[idx] for flags in issue_list) / len(issue_list)
            for idx in range(N_ISSUES)
        ) if issue_list else ()
        trigger_list = triggers.get(variant, [])
        variants[variant] = VariantAggregate(
            n_annotations=len(variant_times),
            avg_time_s=statistics.fmean(variant_times) if variant_times else None,
            std_time_s=statistics.pstdev(variant_times) if variant_times else None,
            avg_triggers=statistics.fmean(trigger_list) if trigger_list else None,
            n_evaluations=n_eval,
            avg_rating=statistics.fmean(variant_ratings) if variant_ratings else None,
            std_rating=statistics.pstdev(variant_ratings) if variant_ratings else None,
            verdicts=verdict_fracs,
            issue_rates=issue_rates,
            hallucination_rate=issue_rates[0] if issue_rates else None,
        )
    return StudyAggregate(variants=variants, n_records=len(records))


_TABLE_LABELS = {
    VARIANT_DRAFT: "Draft Summary",
    VARIANT_NO_INTERACTION: "Human w/o interaction",
    VARIANT_WITH_INTERACTION: "Human w interaction",
}


def render_table(agg: StudyAggregate) -> str:
    """Fixed-width text table mirroring the study-summary layout."""

    def fmt(value, pattern="{:.2f}"):
        return "--" if value is None else pattern.format(value)

    headers = (
        "Variant",
        "Avg. Time (s)",
        "Avg. Rating",
        "Accept / Accept w Edits / Reject",
        "Hallucination Rate",
    )
    rows = [headers]
    for variant in VARIANTS:
        if variant not in agg.variants:
            continue
        v = agg.variants[variant]
        rating = (
            "--"
            if v.avg_rating is None
            else f"{v.avg_rating:.2f} +/- {v.std_rating:.2f}"
        )
        verdict = (
            " / ".join(f"{v.verdicts.get(name, 0.0):.2f}" for name in VERDICTS)
            if v.verdicts
            else "--"
        )
        rows.append(
            (
                _TABLE_LABELS[variant],
                fmt(v.avg_time_s, "{:.1f}"),
                rating,
                verdict,
                fmt(v.hallucination_rate),
            )
        )
    widths = [max(len(row[col]) for row in rows) for col in range(len(headers))]
    lines = []
    for idx, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[col]) for col, cell in enumerate(row)))
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


@dataclass(frozen=True)
class Assignment:
    """Per-annotator document sets for the three tasks."""

    with_interaction: dict
    without_interaction: dict
    evaluation: dict

    def for_annotator(self, annotator: str) -> dict:
        return {
            TASK_WITH: self.with_interaction[annotator],
            TASK_WITHOUT: self.without_interaction[annotator],
            TASK_EVALUATION: self.evaluation[annotator],
        }


def assign_documents(
    document_ids: Sequence[str], annotators: Sequence[str], per_task: int, seed: int
) -> Assignment:
    """Deterministic assignment satisfying the study's disjointness rules.

    Each annotator receives three pairwise-disjoint per_task-sized sets; each
    assigned document is annotated exactly once with and once without
    interaction, and is evaluated by an annotator who produced neither of its
    annotations (achieved by rotating document blocks across annotators).
    """
    annotators = list(annotators)
    n = len(annotators)
    if n < 3:
        raise StudyError(
            "need at least 3 annotators so evaluators never score their own annotations"
        )
    if len(set(annotators)) != n:
        raise StudyError("annotator ids must be distinct")
    needed = n * per_task
    ids = list(document_ids)
    if len(set(ids)) != len(ids):
        raise StudyError("document ids must be distinct")
    if len(ids) < needed:
        raise StudyError(
            f"need {needed} documents ({n} annotators x {per_task} per task), got {len(ids)}"
        )
    rng = random.Random(f"assignment/{seed}")
    rng.shuffle(ids)
    blocks = [tuple(ids[b * per_task : (b + 1) * per_task]) for b in range(n)]
    with_sets = {}
    without_sets = {}
    eval_sets = {}
    for a, annotator in enumerate(annotators):
        with_sets[annotator] = blocks[a]
        without_sets[annotator] = blocks[(a + 1) % n]
        eval_sets[annotator] = blocks[(a + 2) % n]
    return Assignment(
        with_interaction=with_sets,
        without_interaction=without_sets,
        evaluation=eval_sets,
    )


def check_assignment(assignment: Assignment) -> None:
    """Exhaustively verify the disjointness and no-self-evaluation rules."""
    annotators = list(assignment.with_interaction)
    with_by_doc = {}
    without_by_doc = {}
    for annotator in annotators:
        tasks = assignment.for_annotator(annotator)
        sets = [set(tasks[TASK_WITH]), set(tasks[TASK_WITHOUT]), set(tasks[TASK_EVALUATION])]
        if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
            raise StudyError(f"annotator {annotator!r} sees a document in two tasks")
        for doc in tasks[TASK_WITH]:
            if doc in with_by_doc:
                raise StudyError(f"document {doc!r} annotated with interaction twice")
            with_by_doc[doc] = annotator
        for doc in tasks[TASK_WITHOUT]:
            if doc in without_by_doc:
                raise StudyError(f"document {doc!r} annotated without interaction twice")
            without_by_doc[doc] = annotator
    for annotator in annotators:
        for doc in assignment.for_annotator(annotator)[TASK_EVALUATION]:
            if with_by_doc.get(doc) == annotator or without_by_doc.get(doc) == annotator:
                raise StudyError(
                    f"annotator {annotator!r} would evaluate their own annotation of {doc!r}"
                )
            if doc not in with_by_doc or doc not in without_by_doc:
                raise StudyError(f"evaluated document {doc!r} lacks both annotations")
