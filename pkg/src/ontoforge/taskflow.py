"""Executable triad of linked ontologies: objects (static concepts),
processes (static decomposition hierarchy) and tasks (dynamic decomposition
hierarchy), cross-linked by invokesProcess (task → process) and usesObject
(process → object).

Execution walks the task hierarchy depth-first in declared child order.
Entering a leaf task runs its linked processes in declared order; each
process recursively runs its decomposition; each leaf process accesses its
linked objects, runs the bound operation handler and emits a Result. Exits
unwind in reverse order, so results propagate backwards: a parent's exit
always follows every child exit, and a sibling only starts after the
previous sibling has fully exited.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping

from .errors import OntoForgeError
from .ontology import Concept, Ontology, Relation, import_triples

MAX_DEPTH = 4  # process → subprocess → action → operation; task → ... → operator

TASK_ENTER = "TaskEnter"
PROCESS_ENTER = "ProcessEnter"
OBJECT_ACCESS = "ObjectAccess"
RESULT = "Result"
PROCESS_EXIT = "ProcessExit"
TASK_EXIT = "TaskExit"

_ENTER_OF = {TASK_EXIT: TASK_ENTER, PROCESS_EXIT: PROCESS_ENTER}


class KindMismatch(OntoForgeError):
    pass


class InvalidTriad(OntoForgeError):
    pass


class UnboundOperation(OntoForgeError):
    pass


class HandlerFailure(OntoForgeError):
    def __init__(self, node_id: str, cause: Exception, trace: "ExecutionTrace"):
        super().__init__(f"handler for {node_id!r} failed: {cause}")
        self.node_id = node_id
        self.cause = cause
        self.trace = trace  # events up to the failure


class MalformedTrace(OntoForgeError):
    pass


class CrosslinkParseError(OntoForgeError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: str
    node_id: str


@dataclass
class ExecutionTrace:
    events: list[TraceEvent] = field(default_factory=list)

    def append(self, kind: str, node_id: str) -> None:
        self.events.append(TraceEvent(len(self.events), kind, node_id))

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class Artifact:
    node_id: str  # producing leaf task
    name: str
    body: str
    created_at: str


@dataclass(frozen=True)
class LinkViolation:
    kind: str  # MissingProcessLink | MissingObjectLink | WrongKind | UnknownNode | DepthExceeded
    node_id: str
    message: str


@dataclass(frozen=True)
class HandlerCall:
    process_id: str
    objects: tuple[Concept, ...]
    context: Mapping


Handler = Callable[[HandlerCall], str]


def stub_handler(call: HandlerCall) -> str:
    """Default operation: a checklist of the accessed objects."""
    lines = [f"## {call.process_id}"]
    for concept in call.objects:
        entry = f"- {concept.preferred_label}"
        if concept.definition:
            entry += f": {concept.definition}"
        lines.append(entry)
    return "\n".join(lines)


@dataclass
class TriadModel:
    objects: Ontology
    processes: Ontology
    tasks: Ontology
    crosslinks: list[Relation]

    def children(self, ontology: Ontology, node_id: str) -> list[str]:
        """decomposesTo children in declared (relation line) order."""
        return [
            r.object
            for r in ontology.relations
            if r.predicate == "decomposesTo" and r.subject == node_id
        ]

    def roots(self, ontology: Ontology) -> list[str]:
        with_parent = {
            r.object for r in ontology.relations if r.predicate == "decomposesTo"
        }
        return [cid for cid in ontology.concepts if cid not in with_parent]

    def is_leaf(self, ontology: Ontology, node_id: str) -> bool:
        return not self.children(ontology, node_id)

    def invoked_processes(self, task_id: str) -> list[str]:
        return [
            r.object
            for r in self.crosslinks
            if r.predicate == "invokesProcess" and r.subject == task_id
        ]

    def used_objects(self, process_id: str) -> list[str]:
        return [
            r.object
            for r in self.crosslinks
            if r.predicate == "usesObject" and r.subject == process_id
        ]


def _read_text(path: Path | str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidTriad(f"{path}: {exc}") from exc


def load_crosslinks(path: Path | str) -> list[Relation]:
    """Tab-separated crosslink file; line order is the declared order."""
    links: list[Relation] = []
    for line_no, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.rstrip()
        if not line or line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != 3:
            raise CrosslinkParseError("expected 3 tab-separated columns", line_no)
        subject, predicate, obj = columns
        if predicate not in ("invokesProcess", "usesObject"):
            raise CrosslinkParseError(f"unknown crosslink predicate {predicate!r}", line_no)
        links.append(Relation(subject, predicate, obj))
    return links


def _load_member(path: Path | str, expected_kind: str) -> Ontology:
    ontology = import_triples(_read_text(path))
    if ontology.kind != expected_kind:
        raise KindMismatch(
            f"{path}: expected kind {expected_kind!r}, found {ontology.kind!r}"
        )
    violations = ontology.validate()
    if violations:
        raise InvalidTriad(
            f"{path}: " + "; ".join(v.message for v in violations[:5])
        )
    ontology.mutability = "dynamic" if expected_kind == "task" else "static"
    return ontology


def load_triad(
    object_file: Path | str,
    process_file: Path | str,
    task_file: Path | str,
    crosslink_file: Path | str,
) -> TriadModel:
    return TriadModel(
        objects=_load_member(object_file, "object"),
        processes=_load_member(process_file, "process"),
        tasks=_load_member(task_file, "task"),
        crosslinks=load_crosslinks(crosslink_file),
    )


def _depths(triad: TriadModel, ontology: Ontology) -> dict[str, int]:
    depths: dict[str, int] = {}
    stack = [(root, 1) for root in triad.roots(ontology)]
    while stack:
        node, depth = stack.pop()
        if depth > depths.get(node, 0):
            depths[node] = depth
            stack.extend((child, depth + 1) for child in triad.children(ontology, node))
    return depths


def validate_links(triad: TriadModel) -> list[LinkViolation]:
    """Check crosslink completeness and well-formedness plus hierarchy depth."""
    violations: list[LinkViolation] = []

    def locate(node_id: str) -> str | None:
        for name, ontology in (
            ("task", triad.tasks),
            ("process", triad.processes),
            ("object", triad.objects),
        ):
            if node_id in ontology.concepts:
                return name
        return None

    for link in triad.crosslinks:
        wanted = (
            ("task", "process") if link.predicate == "invokesProcess" else ("process", "object")
        )
        for node_id, expected in ((link.subject, wanted[0]), (link.object, wanted[1])):
            actual = locate(node_id)
            if actual is None:
                violations.append(
                    LinkViolation("UnknownNode", node_id, f"{node_id!r} not in any triad member")
                )
            elif actual != expected:
                violations.append(
                    LinkViolation(
                        "WrongKind",
                        node_id,
                        f"{link.predicate} endpoint {node_id!r} is a {actual} node, "
                        f"expected {expected}",
                    )
                )

    for task_id in triad.tasks.concepts:
        if triad.is_leaf(triad.tasks, task_id) and not triad.invoked_processes(task_id):
            violations.append(
                LinkViolation(
                    "MissingProcessLink", task_id, f"leaf task {task_id!r} invokes no process"
                )
            )
    for process_id in triad.processes.concepts:
        if triad.is_leaf(triad.processes, process_id) and not triad.used_objects(process_id):
            violations.append(
                LinkViolation(
                    "MissingObjectLink", process_id, f"leaf process {process_id!r} uses no object"
                )
            )
    for name, ontology in (("task", triad.tasks), ("process", triad.processes)):
        for node, depth in sorted(_depths(triad, ontology).items()):
            if depth > MAX_DEPTH:
                violations.append(
                    LinkViolation(
                        "DepthExceeded",
                        node,
                        f"{name} node {node!r} sits at depth {depth} > {MAX_DEPTH}",
                    )
                )
    return violations


def execute(
    triad: TriadModel,
    handlers: Mapping[str, Handler] | None = None,
    context: Mapping | None = None,
    *,
    allow_stub: bool = True,
    clock: Callable[[], str] | None = None,
) -> tuple[ExecutionTrace, list[Artifact]]:
    """Run the triad. Returns the event trace and one artifact per leaf
    task (the concatenated outputs of its linked process handlers)."""
    violations = validate_links(triad)
    if violations:
        raise InvalidTriad("; ".join(v.message for v in violations[:5]))
    handlers = dict(handlers or {})
    context = dict(context or {})
    now = clock or (lambda: datetime.now(timezone.utc).isoformat())
    trace = ExecutionTrace()
    artifacts: list[Artifact] = []

    def run_process(process_id: str, sink: list[str]) -> None:
        trace.append(PROCESS_ENTER, process_id)
        kids = triad.children(triad.processes, process_id)
        if kids:
            for child in kids:
                run_process(child, sink)
        else:
            object_ids = triad.used_objects(process_id)
            for object_id in object_ids:
                trace.append(OBJECT_ACCESS, object_id)
            handler = handlers.get(process_id)
            if handler is None:
                if not allow_stub:
                    raise UnboundOperation(process_id)
                handler = stub_handler
            call = HandlerCall(
                process_id,
                tuple(triad.objects.concepts[oid] for oid in object_ids),
                context,
            )
            try:
                output = handler(call)
            except Exception as exc:  # abort the run, keep the partial trace
                raise HandlerFailure(process_id, exc, trace) from exc
            trace.append(RESULT, process_id)
            sink.append(output)
        trace.append(PROCESS_EXIT, process_id)

    def run_task(task_id: str) -> None:
        trace.append(TASK_ENTER, task_id)
        kids = triad.children(triad.tasks, task_id)
        if kids:
            for child in kids:
                run_task(child)
        else:
            pieces: list[str] = []
            for process_id in triad.invoked_processes(task_id):
                run_process(process_id, pieces)
            artifacts.append(
                Artifact(task_id, f"{task_id}.md", "\n\n".join(pieces), now())
            )
        trace.append(TASK_EXIT, task_id)

    for root in triad.roots(triad.tasks):
        run_task(root)
    return trace, artifacts


def render_trace(trace: ExecutionTrace) -> str:
    """Indented text rendering, two spaces per nesting level, one
    ``{seq} {kind} {node_id}`` line per event. Raises MalformedTrace on
    unbalanced or mismatched enter/exit pairs."""
    lines: list[str] = []
    stack: list[TraceEvent] = []
    for event in trace.events:
        if event.kind in (TASK_ENTER, PROCESS_ENTER):
            lines.append(f"{'  ' * len(stack)}{event.seq} {event.kind} {event.node_id}")
            stack.append(event)
        elif event.kind in (TASK_EXIT, PROCESS_EXIT):
            if (
                not stack
                or stack[-1].kind != _ENTER_OF[event.kind]
                or stack[-1].node_id != event.node_id
            ):
                raise MalformedTrace(f"unmatched {event.kind} for {event.node_id!r}")
            stack.pop()
            lines.append(f"{'  ' * len(stack)}{event.seq} {event.kind} {event.node_id}")
        elif event.kind in (OBJECT_ACCESS, RESULT):
            if not stack:
                raise MalformedTrace(f"{event.kind} outside any enter/exit pair")
            lines.append(f"{'  ' * len(stack)}{event.seq} {event.kind} {event.node_id}")
        else:
            raise MalformedTrace(f"unknown event kind {event.kind!r}")
    if stack:
        raise MalformedTrace(f"unclosed {stack[-1].kind} for {stack[-1].node_id!r}")
    return "".join(line + "\n" for line in lines)
