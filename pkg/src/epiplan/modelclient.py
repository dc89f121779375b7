"""Model backends, the prompt-template registry, and structured-output extraction.

Three interchangeable backends sit behind one completion call: a remote HTTP
endpoint speaking the chat-completion wire format, a scripted mock that plays
back a fixed transcript, and a rule-based mock that derives deterministic
answers from a scenario fixture. The rule-based mock is a pure function of
(template id, bindings, fixture) and is what the test suite and the offline
CLI run against.
"""

from __future__ import annotations

import json
import re
import string
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import requests

from .condlang import Truth, canonicalize, collect_atoms, evaluate_condition, parse_condition


class ModelClientError(Exception):
    pass


class MissingBinding(ModelClientError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing binding: {name!r}")


class UnknownPlaceholder(ModelClientError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown placeholder: {name!r}")


class TransportError(ModelClientError):
    """Network-level failure; the workflow executor retries these."""


class BackendRefusal(ModelClientError):
    def __init__(self, message: str, status: int | None = None):
        self.status = status
        super().__init__(message)


class NoJsonFound(ModelClientError):
    def __init__(self, excerpt: str):
        super().__init__(f"no JSON value found in model output: {excerpt[:120]!r}")


class TemplateId(str, Enum):
    EPIDEMIC_TYPE_EXTRACTION = "EpidemicTypeExtraction"
    EXTRACT_CONDITION_POINTS = "ExtractConditionPoints"
    CASE_STRUCTURING = "CaseStructuring"
    TASK_LIST_INITIAL = "TaskListInitial"
    TASK_LIST_ITERATIVE = "TaskListIterative"


_PLACEHOLDER = re.compile(r"\{\{([a-z_]+)\}\}")


@dataclass(frozen=True)
class PromptTemplate:
    id: TemplateId
    body: str
    required_placeholders: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        found = frozenset(_PLACEHOLDER.findall(self.body))
        object.__setattr__(self, "required_placeholders", found)


PROMPTS: dict[TemplateId, PromptTemplate] = {
    TemplateId.EPIDEMIC_TYPE_EXTRACTION: PromptTemplate(
        TemplateId.EPIDEMIC_TYPE_EXTRACTION,
        'Based on the epidemic reporting information, select and determine the specific epidemic '
        'type from the candidate list, and return the result in JSON format, '
        'e.g., {"Epidemic Type": "xxx"}.\n'
        'Candidate Epidemic Types: {{candidate_epidemic_types}}\n'
        'Epidemic Reporting Information: {{epidemic_reporting_information}}\n'
        'Answer:'),
    TemplateId.EXTRACT_CONDITION_POINTS: PromptTemplate(
        TemplateId.EXTRACT_CONDITION_POINTS,
        'Based on the candidate plans, extract each independent, atomic condition point from the '
        'trigger conditions and list them out. Do not repeat or categorize them.\n'
        'Example:\n'
        '1. Confirmed cases\n'
        '2. Suspected cases\n'
        '3. Clinically diagnosed cases.\n'
        '\n'
        'Candidate Plan - Trigger Conditions: {{all_trigger_conditions}}\n'
        'Answer:'),
    TemplateId.CASE_STRUCTURING: PromptTemplate(
        TemplateId.CASE_STRUCTURING,
        'Condition Points: {{condition_points}}\n'
        'Epidemic Reporting Information: {{epidemic_reporting_information}}\n'
        '\n'
        'Based on the epidemic reporting information, output the structured analysis according to '
        'the condition points. Example:\n'
        '1. Confirmed cases: Yes\n'
        '2. Suspected cases: No\n'
        '\n'
        'Answer:'),
    TemplateId.TASK_LIST_INITIAL: PromptTemplate(
        TemplateId.TASK_LIST_INITIAL,
        'Risk Cases: {{risk_cases}}\n'
        'Basic Case Information: {{basic_case_information}}\n'
        'Structured Epidemic Reporting Information: {{structured_info}}\n'
        'Candidate Plans: {{candidate_plans}}\n'
        '\n'
        'Based on all the information provided above, select the next task list from the candidate '
        'plans, and strictly output in JSON format:\n'
        '[{"Action": "xxx", "Work Requirement": "xxx", "Responsible Party": "xxx", '
        '"Time Limit": "xxx"}, ...]\n'
        'Answer:'),
    TemplateId.TASK_LIST_ITERATIVE: PromptTemplate(
        TemplateId.TASK_LIST_ITERATIVE,
        'Risk Cases: {{risk_cases}}\n'
        'Basic Case Information: {{basic_case_information}}\n'
        'Structured Epidemic Reporting Information: {{structured_info}}\n'
        'Candidate Plans: {{candidate_plans}}\n'
        'Previous Task List and Feedback: {{previous_task_feedback}}\n'
        '\n'
        'Based on all the information provided above and the previous task list and feedback, '
        'select the next round of the task list from the candidate plans, and strictly output in '
        'JSON format:\n'
        '[{"Action": "xxx", "Work Requirement": "xxx", "Responsible Party": "xxx", '
        '"Time Limit": "xxx"}, ...]\n'
        'Answer:'),
}

# Marker the pipeline appends to the reporting-information binding when
# feedback facts accumulate; the rule-based mock reads lines under it.
FIELD_FINDINGS_HEADER = "Field Findings:"


def render_prompt(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute every placeholder; rejects missing or extraneous bindings."""
    for name in template.required_placeholders:
        if name not in bindings:
            raise MissingBinding(name)
    for name in bindings:
        if name not in template.required_placeholders:
            raise UnknownPlaceholder(name)
    return _PLACEHOLDER.sub(lambda m: bindings[m.group(1)], template.body)


@dataclass(frozen=True)
class ModelRequest:
    template_id: str
    bindings: dict[str, str]
    temperature: float = 0.0
    max_output_tokens: int = 2048

    def __post_init__(self) -> None:
        template = PROMPTS.get(self.template_id)  # type: ignore[arg-type]
        if template is None:
            raise ModelClientError(f"unknown template id {self.template_id!r}")
        if set(self.bindings) != set(template.required_placeholders):
            raise MissingBinding(
                f"bindings {sorted(self.bindings)} do not cover placeholders "
                f"{sorted(template.required_placeholders)} exactly")

    @property
    def template(self) -> PromptTemplate:
        return PROMPTS[self.template_id]  # type: ignore[index]


@dataclass(frozen=True)
class ModelResponse:
    text: str
    backend_id: str
    latency_ms: float


class Backend(Protocol):
    id: str

    def send(self, request: ModelRequest, rendered_prompt: str) -> str: ...


def complete(request: ModelRequest, backend: Backend) -> ModelResponse:
    """Render the request's template and obtain a completion from the backend."""
    prompt = render_prompt(request.template, request.bindings)
    start = time.perf_counter()
    text = backend.send(request, prompt)
    latency_ms = (time.perf_counter() - start) * 1000.0
    return ModelResponse(text=text, backend_id=backend.id, latency_ms=latency_ms)


class HttpBackend:
    """Remote chat-completion endpoint (any HTTP-compatible provider)."""

    def __init__(self, endpoint: str, model: str, token: str = "", timeout: float = 60.0):
        self.id = f"http:{model}"
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.token = token
        self.timeout = timeout

    def send(self, request: ModelRequest, rendered_prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": rendered_prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        try:
            resp = requests.post(f"{self.endpoint}/chat/completions", json=payload,
                                 headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise BackendRefusal(f"backend returned {resp.status_code}: {resp.text[:200]}",
                                 status=resp.status_code)
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendRefusal(f"malformed completion payload: {exc}") from exc


class ScriptedMockBackend:
    """Plays back a fixed transcript of replies, in order."""

    id = "mock-scripted"

    def __init__(self, replies: list[str]):
        self._replies = list(replies)
        self._lock = threading.Lock()
        self.requests_seen: list[ModelRequest] = []

    def send(self, request: ModelRequest, rendered_prompt: str) -> str:
        with self._lock:
            self.requests_seen.append(request)
            if not self._replies:
                raise BackendRefusal("scripted transcript exhausted")
            return self._replies.pop(0)


class RuleBasedMockBackend:
    """Deterministic stand-in for the LLM, driven by one scenario fixture."""

    id = "mock-rule"

    def __init__(self, scenario: dict):
        self.scenario = scenario

    def send(self, request: ModelRequest, rendered_prompt: str) -> str:
        return mock_respond(request, self.scenario).text


class ScenarioMatchingMockBackend:
    """Rule mock over a set of scenario fixtures, selected per request.

    The serving process accepts arbitrary reports, so the fixture is located
    by containment of the scenario's report fields in the request bindings.
    Prompts that carry no report context (condition-point extraction) are
    scenario-independent and answered directly.
    """

    id = "mock-scenarios"

    def __init__(self, scenarios: list[dict]):
        if not scenarios:
            raise ValueError("at least one scenario fixture required")
        self.scenarios = scenarios

    def _match(self, request: ModelRequest) -> dict:
        bindings = request.bindings
        for scenario in self.scenarios:
            report = scenario.get("report", {})
            if "epidemic_reporting_information" in bindings:
                if report.get("report_text", "") in bindings["epidemic_reporting_information"]:
                    return scenario
            elif "risk_cases" in bindings:
                if (report.get("risk_case_info", "") in bindings["risk_cases"]
                        and report.get("basic_case_info", "") in bindings.get("basic_case_information", "")):
                    return scenario
            else:
                return scenario
        raise BackendRefusal("no scenario fixture matches the report")

    def send(self, request: ModelRequest, rendered_prompt: str) -> str:
        return mock_respond(request, self._match(request)).text


def extract_json_value(text: str):
    """First maximal balanced JSON object or array in the text.

    Surrounding prose and code fences are ignored by construction (the scan
    starts at the first bracket); trailing commas are tolerated and removed.
    Anything beyond that is treated as a model failure, not repaired.
    """
    pos = 0
    while True:
        starts = [i for i in (text.find("{", pos), text.find("[", pos)) if i != -1]
        if not starts:
            raise NoJsonFound(text)
        start = min(starts)
        end = _scan_balanced(text, start)
        if end is not None:
            try:
                return json.loads(_drop_trailing_commas(text[start:end]))
            except json.JSONDecodeError:
                pass
        pos = start + 1


def _scan_balanced(text: str, start: int) -> int | None:
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
            if depth == 0:
                return i + 1
    return None


def _drop_trailing_commas(raw: str) -> str:
    out: list[str] = []
    in_string = False
    escaped = False
    i = 0
    while i < len(raw):
        ch = raw[i]
        if in_string:
            out.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            i += 1
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
        elif ch == ",":
            j = i + 1
            while j < len(raw) and raw[j] in " \t\r\n":
                j += 1
            if j < len(raw) and raw[j] in "}]":
                i += 1
                continue  # drop the comma, keep the whitespace
            out.append(ch)
        else:
            out.append(ch)
        i += 1
    return "".join(out)


# ---------------------------------------------------------------------------
# Rule-based mock behavior
# ---------------------------------------------------------------------------

_NAME_SUFFIXES = (" fever", " disease")
_NUMBERED_LINE = re.compile(r"^\s*\d+[.)]\s*(.+?)\s*$")


def _candidate_match_strings(name: str) -> list[str]:
    folded = canonicalize(name)
    variants = [folded]
    for suffix in _NAME_SUFFIXES:
        if folded.endswith(suffix):
            variants.append(folded[: -len(suffix)])
    return variants


def _parse_string_list(text: str) -> list[str]:
    try:
        value = json.loads(text)
        if isinstance(value, list):
            return [str(v) for v in value]
    except json.JSONDecodeError:
        pass
    return [piece.strip() for piece in text.split(",") if piece.strip()]


def _parse_numbered_lines(text: str) -> list[str]:
    out = []
    for line in text.splitlines():
        match = _NUMBERED_LINE.match(line)
        if match:
            out.append(match.group(1))
    return out


_WORD_STRIP = string.punctuation + string.whitespace


def _match_in_entries(atom: str, entries: list[str]) -> Truth | None:
    """Substring match of a canonical atom against entry texts.

    A match whose immediately preceding word is "no"/"not" reads as a
    negative statement. Positive matches win over negative ones within
    the same entry list.
    """
    found_negative = False
    for entry in entries:
        folded = canonicalize(entry)
        start = 0
        while True:
            idx = folded.find(atom, start)
            if idx == -1:
                break
            prefix_words = folded[:idx].split()
            prev = prefix_words[-1].strip(_WORD_STRIP) if prefix_words else ""
            if prev in ("no", "not"):
                found_negative = True
            else:
                return Truth.YES
            start = idx + 1
    return Truth.NO if found_negative else None


def _judge_atom(atom: str, scenario: dict, findings: list[str]) -> Truth:
    verdict = _match_in_entries(atom, findings)
    if verdict is not None:
        return verdict
    verdict = _match_in_entries(atom, scenario.get("facts", []))
    if verdict is not None:
        return verdict
    for neg in scenario.get("negations", []):
        folded = canonicalize(neg)
        if atom in folded or folded in atom:
            return Truth.NO
    return Truth.UNKNOWN  # fixture declares no fact for this atom


def _findings_from_report_binding(report_binding: str) -> list[str]:
    marker = report_binding.find(FIELD_FINDINGS_HEADER)
    if marker == -1:
        return []
    block = report_binding[marker + len(FIELD_FINDINGS_HEADER):]
    findings = _parse_numbered_lines(block)
    if findings:
        return findings
    return [line.strip("- \t") for line in block.splitlines() if line.strip("- \t")]


def _risk_letter(risk_cases: str) -> str:
    match = re.search(r"risk level\s*(?:is|:)?\s*([abcd])\b", risk_cases, re.IGNORECASE)
    return match.group(1).upper() if match else "B"


def _record_work(record: dict) -> str:
    return record.get("Work Requirements") or record.get("Work Requirement", "")


def _select_candidates(request: ModelRequest) -> list[dict]:
    candidates = json.loads(request.bindings["candidate_plans"])
    assignment: dict[str, Truth] = {}
    for line in _parse_numbered_lines(request.bindings["structured_info"]):
        if ":" in line:
            atom, _, verdict = line.rpartition(":")
            assignment[canonicalize(atom)] = Truth.from_text(verdict)
    selected = []
    for record in candidates:
        expr = parse_condition(record["Trigger Condition"]).expr
        if evaluate_condition(expr, assignment) is Truth.YES:
            selected.append(record)
    return selected


def _emit_task_items(records: list[dict], risk: str) -> str:
    high = risk in ("A", "B")
    items = [{
        "Action": r["Action"],
        "Work Requirement": _record_work(r),
        "Responsible Party": r["Responsible Party A/B"] if high else r["Responsible Party C/D"],
        "Time Limit": r["Time Limit"],
    } for r in records]
    return json.dumps(items, ensure_ascii=False)


def mock_respond(request: ModelRequest, scenario: dict) -> ModelResponse:
    """Deterministic rule-based reply for one request against one fixture.

    An atom no fixture fact speaks to is emitted as Unknown rather than
    failing the call.
    """
    start = time.perf_counter()
    template_id = request.template_id

    if template_id == TemplateId.EPIDEMIC_TYPE_EXTRACTION:
        candidates = _parse_string_list(request.bindings["candidate_epidemic_types"])
        report = canonicalize(request.bindings["epidemic_reporting_information"])
        best_name, best_len = "Unknown", 0
        for name in sorted(candidates):
            for variant in _candidate_match_strings(name):
                if variant in report and len(variant) > best_len:
                    best_name, best_len = name, len(variant)
        text = json.dumps({"Epidemic Type": best_name}, ensure_ascii=False)

    elif template_id == TemplateId.EXTRACT_CONDITION_POINTS:
        triggers = _parse_string_list(request.bindings["all_trigger_conditions"])
        atoms = collect_atoms([parse_condition(t).expr for t in triggers if t.strip()])
        text = "\n".join(f"{i + 1}. {atom}" for i, atom in enumerate(atoms))

    elif template_id == TemplateId.CASE_STRUCTURING:
        atoms = [canonicalize(a) for a in _parse_numbered_lines(request.bindings["condition_points"])]
        findings = _findings_from_report_binding(request.bindings["epidemic_reporting_information"])
        lines = []
        for i, atom in enumerate(atoms):
            verdict = _judge_atom(atom, scenario, findings)
            lines.append(f"{i + 1}. {atom}: {verdict.value}")
        text = "\n".join(lines)

    elif template_id == TemplateId.TASK_LIST_INITIAL:
        selected = _select_candidates(request)
        text = _emit_task_items(selected, _risk_letter(request.bindings["risk_cases"]))

    elif template_id == TemplateId.TASK_LIST_ITERATIVE:
        selected = _select_candidates(request)
        previous = json.loads(request.bindings["previous_task_feedback"])
        prior_items = previous.get("previous_task_list", [])
        feedback = previous.get("feedback", {})
        completed_keys = set()
        for entry in feedback.get("items", []):
            if entry.get("status") == "Completed":
                idx = entry.get("index", -1)
                if 0 <= idx < len(prior_items):
                    item = prior_items[idx]
                    completed_keys.add((canonicalize(item.get("Action", "")),
                                        canonicalize(item.get("Work Requirement", ""))))
        remaining = [r for r in selected
                     if (canonicalize(r["Action"]), canonicalize(_record_work(r))) not in completed_keys]
        text = _emit_task_items(remaining, _risk_letter(request.bindings["risk_cases"]))

    else:
        raise ModelClientError(f"rule mock has no rule for template {template_id!r}")

    latency_ms = (time.perf_counter() - start) * 1000.0
    return ModelResponse(text=text, backend_id="mock-rule", latency_ms=latency_ms)
