"""Structured per-disease response-action knowledge base.

One JSON file per disease, each an array of record objects following the
published schema ("Action", "Trigger Condition", "Work Requirements",
"Responsible Party A/B", "Responsible Party C/D", "Time Limit",
"Termination Condition"). Retrieval is exact-match over the canonicalized
disease name; there is deliberately no similarity fallback.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .condlang import CondExpr, canonicalize, collect_atoms, parse_condition

FIELD_ACTION = "Action"
FIELD_TRIGGER = "Trigger Condition"
FIELD_WORK = "Work Requirements"
FIELD_WORK_ALT = "Work Requirement"  # the published listing uses both spellings
FIELD_PARTY_AB = "Responsible Party A/B"
FIELD_PARTY_CD = "Responsible Party C/D"
FIELD_TIME = "Time Limit"
FIELD_TERMINATION = "Termination Condition"

REQUIRED_FIELDS = (
    FIELD_ACTION,
    FIELD_TRIGGER,
    FIELD_WORK,
    FIELD_PARTY_AB,
    FIELD_PARTY_CD,
    FIELD_TIME,
    FIELD_TERMINATION,
)


class RiskLevel(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def is_high(self) -> bool:
        return self in (RiskLevel.A, RiskLevel.B)


class UnknownDisease(Exception):
    """Requested disease is not in the knowledge base; never guessed around."""

    def __init__(self, disease: str):
        self.disease = disease
        super().__init__(f"disease not in knowledge base: {disease!r}")


@dataclass(frozen=True)
class MalformedRecord:
    file: str
    index: int
    field: str
    rule: str

    def to_dict(self) -> dict:
        return {"file": self.file, "index": self.index, "field": self.field, "rule": self.rule}


class KnowledgeBaseError(Exception):
    def __init__(self, violations: list[MalformedRecord]):
        self.violations = violations
        super().__init__(f"{len(violations)} malformed record(s), first: {violations[0]}")


@dataclass(frozen=True)
class ResponseAction:
    action: str
    trigger_condition_raw: str
    trigger_condition: CondExpr
    work_requirement: str
    responsible_ab: str
    responsible_cd: str
    time_limit: str
    termination_condition: str
    trigger_degraded: bool = False

    def to_record_dict(self) -> dict:
        return {
            FIELD_ACTION: self.action,
            FIELD_TRIGGER: self.trigger_condition_raw,
            FIELD_WORK: self.work_requirement,
            FIELD_PARTY_AB: self.responsible_ab,
            FIELD_PARTY_CD: self.responsible_cd,
            FIELD_TIME: self.time_limit,
            FIELD_TERMINATION: self.termination_condition,
        }


@dataclass(frozen=True)
class DiseaseKB:
    disease: str
    actions: tuple[ResponseAction, ...]
    source: str


@dataclass(frozen=True)
class KnowledgeBase:
    by_key: dict[str, DiseaseKB]  # canonical name -> entry; display form kept on the entry

    def get(self, disease: str) -> DiseaseKB | None:
        return self.by_key.get(canonicalize(disease))

    def __len__(self) -> int:
        return len(self.by_key)


def _check_record(record: object, file: str, index: int) -> list[MalformedRecord]:
    if not isinstance(record, dict):
        return [MalformedRecord(file, index, "", "not-an-object")]
    problems = []
    for name in REQUIRED_FIELDS:
        present = name in record or (name == FIELD_WORK and FIELD_WORK_ALT in record)
        if not present:
            problems.append(MalformedRecord(file, index, name, "missing-field"))
            continue
        value = record.get(name, record.get(FIELD_WORK_ALT) if name == FIELD_WORK else None)
        if not isinstance(value, str) or not value.strip():
            problems.append(MalformedRecord(file, index, name, "empty-field"))
    return problems


def _record_to_action(record: dict, file: str, index: int) -> ResponseAction:
    raw_trigger = record[FIELD_TRIGGER]
    parsed = parse_condition(raw_trigger)
    if parsed.degraded:
        warnings.warn(
            f"{file}[{index}]: trigger condition {raw_trigger!r} is outside the "
            "condition grammar and was kept as a single condition point",
            stacklevel=2,
        )
    return ResponseAction(
        action=record[FIELD_ACTION],
        trigger_condition_raw=raw_trigger,
        trigger_condition=parsed.expr,
        work_requirement=record.get(FIELD_WORK) or record[FIELD_WORK_ALT],
        responsible_ab=record[FIELD_PARTY_AB],
        responsible_cd=record[FIELD_PARTY_CD],
        time_limit=record[FIELD_TIME],
        termination_condition=record[FIELD_TERMINATION],
        trigger_degraded=parsed.degraded,
    )


def scan_kb_dir(directory: str | Path) -> list[MalformedRecord]:
    """Validate every record in a KB directory without building the KB."""
    directory = Path(directory)
    problems: list[MalformedRecord] = []
    for path in sorted(directory.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            problems.append(MalformedRecord(path.name, -1, "", "invalid-json"))
            continue
        if not isinstance(doc, list):
            problems.append(MalformedRecord(path.name, -1, "", "not-an-array"))
            continue
        if not doc:
            problems.append(MalformedRecord(path.name, -1, "", "empty-file"))
        for index, record in enumerate(doc):
            problems.extend(_check_record(record, path.name, index))
    return problems


def load_knowledge_base(directory: str | Path, strict: bool = True) -> KnowledgeBase:
    """Load every ``<disease>.json`` in a directory.

    The filename stem is the disease display name. In strict mode any
    malformed record aborts the load; in lenient mode bad records are
    skipped with a warning.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"knowledge-base directory not found: {directory}")

    problems: list[MalformedRecord] = []
    by_key: dict[str, DiseaseKB] = {}
    paths = sorted(directory.glob("*.json"))
    if not paths:
        warnings.warn(f"knowledge-base directory {directory} contains no disease files", stacklevel=2)

    for path in paths:
        display = path.stem
        key = canonicalize(display)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            problems.append(MalformedRecord(path.name, -1, "", "invalid-json"))
            continue
        if not isinstance(doc, list):
            problems.append(MalformedRecord(path.name, -1, "", "not-an-array"))
            continue
        if not doc:
            problems.append(MalformedRecord(path.name, -1, "", "empty-file"))
            continue
        if key in by_key:
            problems.append(MalformedRecord(path.name, -1, "", "duplicate-disease"))
            continue
        actions = []
        for index, record in enumerate(doc):
            record_problems = _check_record(record, path.name, index)
            if record_problems:
                problems.extend(record_problems)
                if not strict:
                    warnings.warn(f"skipping malformed record {path.name}[{index}]", stacklevel=2)
                continue
            actions.append(_record_to_action(record, path.name, index))
        if actions:
            by_key[key] = DiseaseKB(disease=display, actions=tuple(actions), source=str(path))

    if strict and problems:
        raise KnowledgeBaseError(problems)
    return KnowledgeBase(by_key=by_key)


def save_knowledge_base(kb: KnowledgeBase, directory: str | Path) -> None:
    """Write one ``<disease>.json`` per disease; inverse of load."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for entry in kb.by_key.values():
        records = [a.to_record_dict() for a in entry.actions]
        path = directory / f"{entry.disease}.json"
        path.write_text(json.dumps(records, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def list_diseases(kb: KnowledgeBase) -> list[str]:
    """Display names in stable lexicographic (casefolded) order."""
    return sorted((entry.disease for entry in kb.by_key.values()), key=str.casefold)


def retrieve_candidate_plans(kb: KnowledgeBase, disease: str) -> list[ResponseAction]:
    """Exact-match retrieval of a disease's full action list, in KB order."""
    entry = kb.get(disease)
    if entry is None:
        raise UnknownDisease(disease)
    return list(entry.actions)


def extract_condition_points(actions: list[ResponseAction]) -> list[str]:
    """Atomic condition points across the actions' trigger conditions.

    Deterministic counterpart to the condition-point extraction prompt;
    first-occurrence order, deduplicated.
    """
    if not actions:
        raise ValueError("actions must be nonempty")
    return collect_atoms([a.trigger_condition for a in actions])


def select_responsible_party(action: ResponseAction, risk_level: RiskLevel) -> str:
    """A/B scenarios use the A/B party column, C/D scenarios the C/D column."""
    return action.responsible_ab if risk_level.is_high else action.responsible_cd


_DURATION = re.compile(r"(\d+(?:\.\d+)?)\s*(hour|day|week|month)s?", re.IGNORECASE)
_HOURS = {"hour": 1.0, "day": 24.0, "week": 24.0 * 7, "month": 24.0 * 30}


def normalize_time_limit(text: str) -> float | None:
    """Best-effort duration in hours, for sorting only; None when unparseable."""
    match = _DURATION.search(text)
    if not match:
        return None
    return float(match.group(1)) * _HOURS[match.group(2).lower()]
