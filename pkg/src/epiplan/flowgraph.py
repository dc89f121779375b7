"""Directed-graph task-flow engine with dependency-constrained parallelism.

A workflow is a DAG of typed nodes: Model (LLM completion), Rag (knowledge
retrieval), Code and WebSearch (registered functions), Branch (predicate
routing), and ForLoop (map a body subgraph over a collection). The executor
runs eligible nodes concurrently up to a parallelism bound, retries nodes on
timeouts and transport failures, skips everything downstream of unselected
branch arms or failed nodes, and returns a per-node execution trace.

Loops never appear as back-edges: a ForLoop embeds its body as a nested
acyclic subgraph, so the outer graph stays a DAG and validation stays
decidable. Trace timestamps are process-relative monotonic milliseconds.
"""

from __future__ import annotations

import json
import threading
import time
from collections.abc import Callable
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from . import knowledge as knowledge_mod
from . import modelclient

# The lingua franca passed between nodes: any JSON-representable value.
NodeValue = Any

ENTRY_PREFIX = "@"


class NodeKind(Enum):
    MODEL = "model"
    RAG = "rag"
    CODE = "code"
    WEB_SEARCH = "web_search"
    BRANCH = "branch"
    FOR_LOOP = "for_loop"


class NodeStatus(Enum):
    SUCCEEDED = "Succeeded"
    FAILED = "Failed"
    SKIPPED = "Skipped"


class FlowgraphError(Exception):
    pass


class GraphValidationError(FlowgraphError):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__(f"invalid graph: {[v.rule for v in violations]}")


class UnknownRegistryName(FlowgraphError):
    pass


class SlotTypeMismatch(FlowgraphError):
    pass


class NodeTimeoutError(FlowgraphError):
    """A node attempt exceeded the per-node timeout; retryable."""

    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"node {node_id!r} timed out")


class RetryableNodeError(FlowgraphError):
    """Base for node errors the executor may retry within budget."""


class NodeFailure(FlowgraphError):
    """A node exhausted its retries; downstream nodes were skipped."""

    def __init__(self, node_id: str, cause: BaseException, trace: "ExecutionTrace", values: dict[str, NodeValue]):
        self.node_id = node_id
        self.cause = cause
        self.trace = trace
        self.values = values
        super().__init__(f"node {node_id!r} failed: {cause}")


@dataclass(frozen=True)
class NodeSpec:
    """One workflow node.

    ``inputs`` binds named slots to value sources: another node's id, or
    ``@name`` for a graph entry input. ``params`` is kind-specific; see
    ``validate_graph`` for what each kind requires.
    """

    id: str
    kind: NodeKind
    inputs: tuple[tuple[str, str], ...] = ()
    params: dict[str, Any] = field(default_factory=dict)

    def input_map(self) -> dict[str, str]:
        return dict(self.inputs)


@dataclass(frozen=True)
class FlowGraph:
    nodes: tuple[NodeSpec, ...]
    entry_inputs: tuple[str, ...] = ()
    outputs: dict[str, str] = field(default_factory=dict)
    edges: tuple[tuple[str, str], ...] = None  # type: ignore[assignment]  # derived when omitted

    def __post_init__(self) -> None:
        if self.edges is None:
            object.__setattr__(self, "edges", derive_edges(self.nodes))

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)


def derive_edges(nodes: tuple[NodeSpec, ...]) -> tuple[tuple[str, str], ...]:
    """Data edges from input bindings plus control edges from Branch outcomes."""
    edges: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()

    def add(a: str, b: str) -> None:
        if (a, b) not in seen:
            seen.add((a, b))
            edges.append((a, b))

    for n in nodes:
        for _, src in n.inputs:
            if not src.startswith(ENTRY_PREFIX):
                add(src, n.id)
    for n in nodes:
        if n.kind is NodeKind.BRANCH:
            for successors in n.params.get("outcomes", {}).values():
                for succ in successors:
                    add(n.id, succ)  # dangling successors surface via validation
    return tuple(edges)


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str
    detail: str = ""


ValidationReport = list[Violation]


@dataclass(frozen=True)
class NodeRecord:
    node_id: str
    status: NodeStatus
    attempts: int
    started_ms: float
    ended_ms: float
    inputs: dict[str, NodeValue]
    output: NodeValue


@dataclass(frozen=True)
class ExecutionTrace:
    records: tuple[NodeRecord, ...]

    def record_for(self, node_id: str) -> NodeRecord:
        for r in self.records:
            if r.node_id == node_id:
                return r
        raise KeyError(node_id)

    def statuses(self) -> dict[str, NodeStatus]:
        return {r.node_id: r.status for r in self.records}

    def to_jsonl(self) -> str:
        """One JSON record per node, for export."""
        lines = []
        for r in self.records:
            lines.append(json.dumps({
                "node": r.node_id,
                "status": r.status.value,
                "attempts": r.attempts,
                "started_ms": r.started_ms,
                "ended_ms": r.ended_ms,
                "inputs": r.inputs,
                "output": r.output,
            }, ensure_ascii=False))
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class ExecutionBudget:
    max_parallel: int = 4
    per_node_timeout: float = 60.0
    max_retries: int = 2

    def __post_init__(self) -> None:
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")


@dataclass
class Registry:
    """Names resolvable at execution time.

    ``functions`` backs Code, WebSearch, and Branch predicates; ``backend``
    serves Model nodes; ``kb`` serves Rag nodes.
    """

    functions: dict[str, Callable[..., NodeValue]] = field(default_factory=dict)
    backend: Optional["modelclient.Backend"] = None
    kb: Optional["knowledge_mod.KnowledgeBase"] = None


_KIND_VALUES = {k.value: k for k in NodeKind}


def validate_graph(graph: FlowGraph) -> ValidationReport:
    """Collect structural violations; an empty report means execute() cannot
    fail on structural grounds."""
    return _validate(graph, prefix="")


def _validate(graph: FlowGraph, prefix: str) -> ValidationReport:
    report: ValidationReport = []
    ids: set[str] = set()
    for n in graph.nodes:
        if n.id in ids:
            report.append(Violation("duplicate-node-id", prefix + n.id))
        ids.add(n.id)

    entry = set(graph.entry_inputs)
    for n in graph.nodes:
        slots_seen: set[str] = set()
        for slot, src in n.inputs:
            if slot in slots_seen:
                report.append(Violation("duplicate-slot", prefix + n.id, f"slot {slot!r} bound twice"))
            slots_seen.add(slot)
            if src.startswith(ENTRY_PREFIX):
                if src[1:] not in entry:
                    report.append(Violation("undeclared-entry", prefix + n.id, f"slot {slot!r} reads {src!r}"))
            elif src not in ids:
                report.append(Violation("dangling-edge", src, f"input of {prefix + n.id}"))
        report.extend(_validate_params(n, ids, prefix))

    for a, b in graph.edges:
        if a not in ids:
            report.append(Violation("dangling-edge", a, f"edge ({a!r}, {b!r})"))
        if b not in ids:
            report.append(Violation("dangling-edge", b, f"edge ({a!r}, {b!r})"))

    derived = set(derive_edges(graph.nodes))
    if set(graph.edges) != derived:
        report.append(Violation("edge-mismatch", prefix.rstrip("/") or "<graph>",
                                "declared edges disagree with input bindings and branch outcomes"))

    for name, node_id in graph.outputs.items():
        if node_id not in ids:
            report.append(Violation("output-unknown-node", node_id, f"output {name!r}"))

    if _has_cycle(graph):
        report.append(Violation("cycle", prefix.rstrip("/") or "<graph>"))
    return report


def _validate_params(n: NodeSpec, ids: set[str], prefix: str) -> ValidationReport:
    report: ValidationReport = []
    subject = prefix + n.id
    slots = {slot for slot, _ in n.inputs}

    def need(key: str) -> bool:
        if key not in n.params:
            report.append(Violation("missing-param", subject, f"{n.kind.value} node requires param {key!r}"))
            return False
        return True

    if n.kind is NodeKind.MODEL:
        if need("template"):
            template_id = n.params["template"]
            template = modelclient.PROMPTS.get(template_id)
            if template is None:
                report.append(Violation("unknown-template", subject, repr(template_id)))
            elif slots != template.required_placeholders:
                missing = template.required_placeholders - slots
                extra = slots - template.required_placeholders
                report.append(Violation("slot-mismatch", subject,
                                        f"missing={sorted(missing)} extra={sorted(extra)}"))
    elif n.kind is NodeKind.RAG:
        key_slot = n.params.get("key_slot")
        if key_slot is None and len(slots) != 1:
            report.append(Violation("missing-param", subject, "rag node needs key_slot or exactly one input"))
        elif key_slot is not None and key_slot not in slots:
            report.append(Violation("missing-param", subject, f"key_slot {key_slot!r} is not an input slot"))
    elif n.kind in (NodeKind.CODE, NodeKind.WEB_SEARCH):
        need("fn")
    elif n.kind is NodeKind.BRANCH:
        need("predicate")
        if need("outcomes"):
            outcomes = n.params["outcomes"]
            if not outcomes:
                report.append(Violation("branch-empty-outcome", subject, "no outcomes declared"))
            claimed: set[str] = set()
            for label, successors in outcomes.items():
                if not successors:
                    report.append(Violation("branch-empty-outcome", subject, f"outcome {label!r}"))
                for succ in successors:
                    if succ in claimed:
                        report.append(Violation("branch-overlapping-outcomes", subject, succ))
                    claimed.add(succ)
                    if succ not in ids:
                        report.append(Violation("dangling-edge", succ, f"successor of {subject}"))
    elif n.kind is NodeKind.FOR_LOOP:
        if need("collection_slot") and n.params["collection_slot"] not in slots:
            report.append(Violation("missing-param", subject,
                                    f"collection_slot {n.params['collection_slot']!r} is not an input slot"))
        if need("body"):
            body = n.params["body"]
            if not isinstance(body, FlowGraph):
                report.append(Violation("missing-param", subject, "body must be a FlowGraph"))
            else:
                item_input = n.params.get("item_input", "item")
                if item_input not in body.entry_inputs:
                    report.append(Violation("missing-param", subject,
                                            f"body does not declare entry input {item_input!r}"))
                body_output = n.params.get("body_output")
                if body_output is None and len(body.outputs) != 1:
                    report.append(Violation("missing-param", subject,
                                            "body_output required unless body has exactly one output"))
                elif body_output is not None and body_output not in body.outputs:
                    report.append(Violation("missing-param", subject, f"unknown body output {body_output!r}"))
                report.extend(_validate(body, prefix=f"{subject}/body/"))
    return report


def _has_cycle(graph: FlowGraph) -> bool:
    ids = [n.id for n in graph.nodes]
    adjacency: dict[str, list[str]] = {i: [] for i in ids}
    indegree = {i: 0 for i in ids}
    for a, b in graph.edges:
        if a in indegree and b in indegree:
            adjacency[a].append(b)
            indegree[b] += 1
    queue = [i for i in ids if indegree[i] == 0]
    visited = 0
    while queue:
        node = queue.pop()
        visited += 1
        for child in adjacency[node]:
            indegree[child] -= 1
            if indegree[child] == 0:
                queue.append(child)
    return visited != len(ids)


def _stringify(value: NodeValue) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value, ensure_ascii=False)


# Re-asks within a Model node when the output fails its declared shape check.
MODEL_SHAPE_RETRIES = 2


def run_node(node: NodeSpec, slot_values: dict[str, NodeValue], registry: Registry,
             budget: ExecutionBudget | None = None) -> NodeValue:
    """Execute a single node with all its slots bound."""
    for slot, _ in node.inputs:
        if slot not in slot_values:
            raise SlotTypeMismatch(f"node {node.id!r}: slot {slot!r} unbound")

    if node.kind is NodeKind.MODEL:
        return _run_model_node(node, slot_values, registry)
    if node.kind is NodeKind.RAG:
        key_slot = node.params.get("key_slot") or node.inputs[0][0]
        disease = slot_values[key_slot]
        if not isinstance(disease, str):
            raise SlotTypeMismatch(f"node {node.id!r}: retrieval key must be a string")
        if registry.kb is None:
            raise UnknownRegistryName(f"node {node.id!r}: no knowledge base in registry")
        actions = knowledge_mod.retrieve_candidate_plans(registry.kb, disease)
        return [a.to_record_dict() for a in actions]
    if node.kind in (NodeKind.CODE, NodeKind.WEB_SEARCH):
        fn = registry.functions.get(node.params["fn"])
        if fn is None:
            raise UnknownRegistryName(node.params["fn"])
        return fn(**slot_values)
    if node.kind is NodeKind.BRANCH:
        predicate = registry.functions.get(node.params["predicate"])
        if predicate is None:
            raise UnknownRegistryName(node.params["predicate"])
        label = predicate(**slot_values)
        if label not in node.params["outcomes"]:
            raise FlowgraphError(f"branch {node.id!r}: predicate returned unknown outcome {label!r}")
        return label
    if node.kind is NodeKind.FOR_LOOP:
        collection = slot_values[node.params["collection_slot"]]
        if not isinstance(collection, list):
            raise SlotTypeMismatch(f"node {node.id!r}: collection slot is not an array")
        body: FlowGraph = node.params["body"]
        item_input = node.params.get("item_input", "item")
        body_output = node.params.get("body_output") or next(iter(body.outputs))
        results = []
        inner_budget = ExecutionBudget(max_parallel=1,
                                       per_node_timeout=(budget or ExecutionBudget()).per_node_timeout,
                                       max_retries=(budget or ExecutionBudget()).max_retries)
        for element in collection:
            body_inputs = {item_input: element}
            for name in body.entry_inputs:
                if name != item_input and name in slot_values:
                    body_inputs[name] = slot_values[name]
            values, _ = execute(body, body_inputs, registry, inner_budget)
            results.append(values[body_output])
        return results
    raise FlowgraphError(f"unknown node kind {node.kind!r}")


def _run_model_node(node: NodeSpec, slot_values: dict[str, NodeValue], registry: Registry) -> str:
    if registry.backend is None:
        raise UnknownRegistryName(f"node {node.id!r}: no model backend in registry")
    template_id = node.params["template"]
    bindings = {slot: _stringify(slot_values[slot]) for slot, _ in node.inputs}
    decoding = node.params.get("decoding") or {}
    request = modelclient.ModelRequest(template_id=template_id, bindings=bindings, **decoding)
    expect = node.params.get("expect")
    last_error: Exception | None = None
    for _ in range(1 + MODEL_SHAPE_RETRIES):
        response = modelclient.complete(request, registry.backend)
        if expect is None:
            return response.text
        try:
            _check_shape(response.text, expect)
            return response.text
        except modelclient.NoJsonFound as exc:
            last_error = exc
    raise last_error  # type: ignore[misc]


def _check_shape(text: str, expect: str) -> None:
    if expect == "json_object":
        value = modelclient.extract_json_value(text)
        if not isinstance(value, dict):
            raise modelclient.NoJsonFound(text[:120])
    elif expect == "json_array":
        value = modelclient.extract_json_value(text)
        if not isinstance(value, list):
            raise modelclient.NoJsonFound(text[:120])
    elif expect == "numbered_lines":
        if not any(line.strip() and line.strip()[0].isdigit() for line in text.splitlines()):
            raise modelclient.NoJsonFound(text[:120])
    else:
        raise FlowgraphError(f"unknown expect shape {expect!r}")


def _now_ms() -> float:
    return time.monotonic_ns() / 1e6


_RETRYABLE = (NodeTimeoutError, RetryableNodeError, modelclient.TransportError)


class _Run:
    """Mutable per-execution state; the scheduler thread owns all of it and
    worker threads only touch the start-time map under the lock."""

    def __init__(self, graph: FlowGraph, inputs: dict[str, NodeValue], registry: Registry,
                 budget: ExecutionBudget):
        self.graph = graph
        self.inputs = inputs
        self.registry = registry
        self.budget = budget
        self.order = {n.id: i for i, n in enumerate(graph.nodes)}
        self.deps: dict[str, set[str]] = {n.id: set() for n in graph.nodes}
        self.children: dict[str, set[str]] = {n.id: set() for n in graph.nodes}
        for a, b in graph.edges:
            self.deps[b].add(a)
            self.children[a].add(b)
        self.values: dict[str, NodeValue] = {}
        self.done: dict[str, NodeStatus] = {}
        self.attempts: dict[str, int] = {n.id: 0 for n in graph.nodes}
        self.live_attempt: dict[str, int] = {}
        self.started_ms: dict[str, float] = {}
        self.ended_ms: dict[str, float] = {}
        self.snapshots: dict[str, dict[str, NodeValue]] = {}
        self.body_start: dict[tuple[str, int], float] = {}
        self.lock = threading.Lock()
        self.dispatched: set[str] = set()

    def slot_snapshot(self, node: NodeSpec) -> dict[str, NodeValue]:
        out: dict[str, NodeValue] = {}
        for slot, src in node.inputs:
            if src.startswith(ENTRY_PREFIX):
                out[slot] = self.inputs[src[1:]]
            else:
                out[slot] = self.values[src]
        return out

    def ready(self) -> list[NodeSpec]:
        eligible = []
        for n in self.graph.nodes:
            if n.id in self.done or n.id in self.dispatched:
                continue
            if all(self.done.get(d) is NodeStatus.SUCCEEDED for d in self.deps[n.id]):
                eligible.append(n)
        return eligible

    def skip_downstream(self, node_id: str) -> None:
        stack = [c for c in self.children[node_id]]
        now = _now_ms()
        while stack:
            nid = stack.pop()
            if nid in self.done:
                continue
            self.done[nid] = NodeStatus.SKIPPED
            self.started_ms.setdefault(nid, now)
            self.ended_ms.setdefault(nid, now)
            stack.extend(self.children[nid])

    def skip_unselected(self, branch: NodeSpec, selected: str) -> None:
        now = _now_ms()
        for label, successors in branch.params["outcomes"].items():
            if label == selected:
                continue
            for succ in successors:
                if succ not in self.done:
                    self.done[succ] = NodeStatus.SKIPPED
                    self.started_ms.setdefault(succ, now)
                    self.ended_ms.setdefault(succ, now)
                    self.skip_downstream(succ)


def execute(graph: FlowGraph, inputs: dict[str, NodeValue], registry: Registry,
            budget: ExecutionBudget | None = None) -> tuple[dict[str, NodeValue], ExecutionTrace]:
    """Run a validated graph to completion.

    Returns the declared output bindings (keys for skipped nodes are omitted)
    and the full trace. Raises NodeFailure, with the partial trace attached,
    if any node exhausts its retries; independent nodes still run to
    completion first.
    """
    budget = budget or ExecutionBudget()
    violations = validate_graph(graph)
    if violations:
        raise GraphValidationError(violations)
    missing = [name for name in graph.entry_inputs if name not in inputs]
    if missing:
        raise ValueError(f"missing entry inputs: {missing}")
    unknown = [name for name in inputs if name not in graph.entry_inputs]
    if unknown:
        raise ValueError(f"unknown entry inputs: {unknown}")
    _check_registry(graph, registry)

    run = _Run(graph, inputs, registry, budget)
    timeout_ms = budget.per_node_timeout * 1000.0

    def worker(node: NodeSpec, attempt: int, slots: dict[str, NodeValue]) -> NodeValue:
        with run.lock:
            run.body_start[(node.id, attempt)] = _now_ms()
        return run_node(node, slots, registry, budget)

    with ThreadPoolExecutor(max_workers=budget.max_parallel) as pool:
        futures: dict[Future, tuple[str, int]] = {}

        def dispatch(node: NodeSpec) -> None:
            run.attempts[node.id] += 1
            attempt = run.attempts[node.id]
            run.live_attempt[node.id] = attempt
            if node.id not in run.snapshots:
                run.snapshots[node.id] = run.slot_snapshot(node)
            futures[pool.submit(worker, node, attempt, run.snapshots[node.id])] = (node.id, attempt)

        def settle_failure(node_id: str, exc: BaseException) -> None:
            node = graph.node(node_id)
            if isinstance(exc, _RETRYABLE) and run.attempts[node_id] <= budget.max_retries:
                dispatch(node)
                return
            run.done[node_id] = NodeStatus.FAILED
            run.ended_ms[node_id] = _now_ms()
            run.values[node_id] = None
            run.dispatched.discard(node_id)
            run.skip_downstream(node_id)
            failures[node_id] = exc

        failures: dict[str, BaseException] = {}

        while True:
            for node in run.ready():
                run.dispatched.add(node.id)
                dispatch(node)
            if not futures:
                break
            completed, _ = wait(list(futures), timeout=0.02, return_when=FIRST_COMPLETED)
            for fut in completed:
                node_id, attempt = futures.pop(fut)
                if run.live_attempt.get(node_id) != attempt or node_id in run.done:
                    continue  # stale attempt, result discarded
                with run.lock:
                    started = run.body_start.get((node_id, attempt), _now_ms())
                run.started_ms.setdefault(node_id, started)
                exc = fut.exception()
                if exc is None:
                    run.values[node_id] = fut.result()
                    run.done[node_id] = NodeStatus.SUCCEEDED
                    run.ended_ms[node_id] = _now_ms()
                    run.dispatched.discard(node_id)
                    node = graph.node(node_id)
                    if node.kind is NodeKind.BRANCH:
                        run.skip_unselected(node, run.values[node_id])
                else:
                    settle_failure(node_id, exc)
            # abandon attempts that overran the per-node timeout
            now = _now_ms()
            overdue: list[tuple[str, int]] = []
            with run.lock:
                for (node_id, attempt), t0 in run.body_start.items():
                    if (run.live_attempt.get(node_id) == attempt and node_id not in run.done
                            and now - t0 > timeout_ms):
                        overdue.append((node_id, attempt))
            for node_id, attempt in overdue:
                run.started_ms.setdefault(node_id, run.body_start[(node_id, attempt)])
                run.live_attempt.pop(node_id)  # running attempt becomes stale
                settle_failure(node_id, NodeTimeoutError(node_id))

    records = []
    for n in graph.nodes:
        status = run.done.get(n.id, NodeStatus.SKIPPED)
        records.append(NodeRecord(
            node_id=n.id,
            status=status,
            attempts=run.attempts[n.id],
            started_ms=run.started_ms.get(n.id, _now_ms()),
            ended_ms=run.ended_ms.get(n.id, _now_ms()),
            inputs=run.snapshots.get(n.id, {}),
            output=run.values.get(n.id) if status is NodeStatus.SUCCEEDED else None,
        ))
    trace = ExecutionTrace(tuple(records))

    final: dict[str, NodeValue] = {}
    for name, node_id in graph.outputs.items():
        if run.done.get(node_id) is NodeStatus.SUCCEEDED:
            final[name] = run.values[node_id]

    if failures:
        first = min(failures, key=lambda nid: run.order[nid])
        raise NodeFailure(first, failures[first], trace, final)
    return final, trace


def _check_registry(graph: FlowGraph, registry: Registry) -> None:
    for n in graph.nodes:
        if n.kind in (NodeKind.CODE, NodeKind.WEB_SEARCH) and n.params["fn"] not in registry.functions:
            raise UnknownRegistryName(n.params["fn"])
        if n.kind is NodeKind.BRANCH and n.params["predicate"] not in registry.functions:
            raise UnknownRegistryName(n.params["predicate"])
        if n.kind is NodeKind.MODEL and registry.backend is None:
            raise UnknownRegistryName(f"node {n.id!r}: no model backend configured")
        if n.kind is NodeKind.RAG and registry.kb is None:
            raise UnknownRegistryName(f"node {n.id!r}: no knowledge base configured")
        if n.kind is NodeKind.FOR_LOOP:
            _check_registry(n.params["body"], registry)


def graph_to_json(graph: FlowGraph) -> dict:
    """Serialize to the documented graph definition format."""
    nodes = []
    for n in graph.nodes:
        params = dict(n.params)
        if n.kind is NodeKind.FOR_LOOP and isinstance(params.get("body"), FlowGraph):
            params["body"] = graph_to_json(params["body"])
        nodes.append({
            "id": n.id,
            "kind": n.kind.value,
            "inputs": {slot: src for slot, src in n.inputs},
            "params": params,
        })
    return {
        "inputs": list(graph.entry_inputs),
        "nodes": nodes,
        "edges": [list(e) for e in graph.edges],
        "outputs": dict(graph.outputs),
    }


def graph_from_json(doc: dict) -> FlowGraph:
    """Parse the documented graph definition format."""
    nodes = []
    for nd in doc.get("nodes", []):
        kind = _KIND_VALUES.get(nd.get("kind"))
        if kind is None:
            raise ValueError(f"unknown node kind {nd.get('kind')!r}")
        params = dict(nd.get("params", {}))
        if kind is NodeKind.FOR_LOOP and isinstance(params.get("body"), dict):
            params["body"] = graph_from_json(params["body"])
        nodes.append(NodeSpec(
            id=nd["id"],
            kind=kind,
            inputs=tuple((slot, src) for slot, src in nd.get("inputs", {}).items()),
            params=params,
        ))
    edges = doc.get("edges")
    return FlowGraph(
        nodes=tuple(nodes),
        entry_inputs=tuple(doc.get("inputs", [])),
        outputs=dict(doc.get("outputs", {})),
        edges=tuple((a, b) for a, b in edges) if edges is not None else None,
    )
