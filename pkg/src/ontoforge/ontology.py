"""Knowledge-base core: concept/relation graph model, validation,
deterministic triple serialization and the versioned ontology library.

The serialization is a small line-oriented Turtle subset (see export_triples).
Export is canonical — concepts sorted by id, synonyms sorted, relations
sorted by (subject, predicate, object) — so identical content always yields
identical bytes regardless of insertion order.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import OntoForgeError

PREDICATES = (
    "isA",
    "partOf",
    "assoc",
    "synonymOf",
    "usesObject",
    "invokesProcess",
    "decomposesTo",
)
# predicates whose subgraphs must stay acyclic
ACYCLIC_PREDICATES = ("isA", "decomposesTo")
KINDS = ("object", "process", "task", "mixed")
MUTABILITIES = ("static", "dynamic")

PREFIX_LINE = "@prefix ont: <urn:icon:onto#> ."


class MalformedId(OntoForgeError):
    pass


class DuplicateConcept(OntoForgeError):
    pass


class UnknownEndpoint(OntoForgeError):
    pass


class CycleError(OntoForgeError):
    pass


class DuplicateRelation(OntoForgeError):
    pass


class InvalidOntology(OntoForgeError):
    pass


class ParseError(OntoForgeError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnknownPredicate(ParseError):
    pass


class ChecksumMismatch(OntoForgeError):
    pass


class NotFound(OntoForgeError):
    pass


def is_slug(text: str) -> bool:
    """Identifier charset: lowercase letters (any script), ASCII digits, '_'."""
    if not text:
        return False
    return all(
        c == "_" or ("0" <= c <= "9") or (c.isalpha() and c.islower()) for c in text
    )


def slugify(text: str) -> str:
    """Best-effort slug for generated ids: case-fold, map separators to '_'."""
    folded = text.casefold()
    out = []
    for c in folded:
        if c == "_" or ("0" <= c <= "9") or (c.isalpha() and c.islower()):
            out.append(c)
        elif c in " -\t":
            out.append("_")
        # anything else is dropped
    slug = "".join(out).strip("_")
    return slug or "concept"


@dataclass
class Concept:
    concept_id: str
    preferred_label: str
    synonyms: set[str] = field(default_factory=set)
    definition: str | None = None
    sources: set[int] = field(default_factory=set)

    def __post_init__(self):
        # the preferred label never doubles as a synonym
        self.synonyms.discard(self.preferred_label)

    def copy(self) -> "Concept":
        return Concept(
            self.concept_id,
            self.preferred_label,
            set(self.synonyms),
            self.definition,
            set(self.sources),
        )


@dataclass(frozen=True)
class Relation:
    subject: str
    predicate: str
    object: str
    weight: float = 1.0
    provenance: str | None = None

    def triple(self) -> tuple[str, str, str]:
        return (self.subject, self.predicate, self.object)


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str


class Ontology:
    """Mutable ontology snapshot. Mutators check invariants up front and
    either apply the change completely or raise without touching state."""

    def __init__(
        self,
        ontology_id: str,
        name: str | None = None,
        kind: str = "mixed",
        mutability: str = "static",
        version: int = 1,
    ):
        if not is_slug(ontology_id):
            raise MalformedId(f"ontology id {ontology_id!r} is not a slug")
        if kind not in KINDS:
            raise ValueError(f"unknown ontology kind {kind!r}")
        if mutability not in MUTABILITIES:
            raise ValueError(f"unknown mutability {mutability!r}")
        self.ontology_id = ontology_id
        self.name = name or ontology_id
        self.kind = kind
        self.mutability = mutability
        self.version = version
        self.concepts: dict[str, Concept] = {}
        self.relations: list[Relation] = []

    def add_concept(self, concept: Concept) -> "Ontology":
        if not is_slug(concept.concept_id):
            raise MalformedId(f"concept id {concept.concept_id!r} is not a slug")
        if concept.concept_id in self.concepts:
            raise DuplicateConcept(concept.concept_id)
        self.concepts[concept.concept_id] = concept
        return self

    def add_relation(self, relation: Relation) -> "Ontology":
        if relation.predicate not in PREDICATES:
            raise ValueError(f"unknown predicate {relation.predicate!r}")
        for endpoint in (relation.subject, relation.object):
            if endpoint not in self.concepts:
                raise UnknownEndpoint(endpoint)
        if relation.subject == relation.object and relation.predicate != "assoc":
            # self-reference is meaningful only for plain association
            raise CycleError(
                f"{relation.predicate} self-loop on {relation.subject!r}"
            )
        if any(r.triple() == relation.triple() for r in self.relations):
            raise DuplicateRelation(" ".join(relation.triple()))
        if relation.predicate in ACYCLIC_PREDICATES and self._reaches(
            relation.predicate, relation.object, relation.subject
        ):
            raise CycleError(
                f"{' '.join(relation.triple())} would close a "
                f"{relation.predicate} cycle"
            )
        self.relations.append(relation)
        return self

    def _reaches(self, predicate: str, start: str, goal: str) -> bool:
        adjacency: dict[str, list[str]] = {}
        for r in self.relations:
            if r.predicate == predicate:
                adjacency.setdefault(r.subject, []).append(r.object)
        stack, seen = [start], {start}
        while stack:
            node = stack.pop()
            if node == goal:
                return True
            for nxt in adjacency.get(node, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def validate(self) -> list[Violation]:
        """Full invariant check; an empty list means the ontology is sound."""
        violations: list[Violation] = []
        for cid, concept in self.concepts.items():
            if not concept.preferred_label:
                violations.append(Violation("EmptyLabel", cid, "empty preferred label"))
        seen: dict[tuple[str, str, str], int] = {}
        for r in self.relations:
            for endpoint in (r.subject, r.object):
                if endpoint not in self.concepts:
                    violations.append(
                        Violation(
                            "UnknownEndpoint",
                            endpoint,
                            f"relation {' '.join(r.triple())} references "
                            f"missing concept {endpoint!r}",
                        )
                    )
            seen[r.triple()] = seen.get(r.triple(), 0) + 1
        for triple, count in seen.items():
            if count > 1:
                violations.append(
                    Violation(
                        "DuplicateRelation", triple[0], " ".join(triple) + f" ×{count}"
                    )
                )
        for predicate in ACYCLIC_PREDICATES:
            if self._has_cycle(predicate):
                violations.append(
                    Violation("Cycle", predicate, f"{predicate} subgraph is cyclic")
                )
        return violations

    def _has_cycle(self, predicate: str) -> bool:
        adjacency: dict[str, list[str]] = {}
        for r in self.relations:
            if r.predicate == predicate:
                adjacency.setdefault(r.subject, []).append(r.object)
        WHITE, GREY, BLACK = 0, 1, 2
        color = {node: WHITE for node in adjacency}

        def visit(node: str) -> bool:
            color[node] = GREY
            for nxt in adjacency.get(node, ()):
                state = color.get(nxt, WHITE)
                if state == GREY:
                    return True
                if state == WHITE and visit(nxt):
                    return True
            color[node] = BLACK
            return False

        return any(color[n] == WHITE and visit(n) for n in list(adjacency))

    def copy(self) -> "Ontology":
        clone = Ontology(
            self.ontology_id, self.name, self.kind, self.mutability, self.version
        )
        clone.concepts = {cid: c.copy() for cid, c in self.concepts.items()}
        clone.relations = list(self.relations)
        return clone


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _unescape(raw: str, line_no: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        if raw[i] == "\\":
            if i + 1 >= len(raw) or raw[i + 1] not in '"\\':
                raise ParseError("bad escape sequence", line_no)
            out.append(raw[i + 1])
            i += 2
        else:
            out.append(raw[i])
            i += 1
    return "".join(out)


def export_triples(ontology: Ontology) -> str:
    """Serialize to the canonical Turtle subset. Raises InvalidOntology if
    validation fails or any text contains a line break (the format is
    strictly line-oriented)."""
    violations = ontology.validate()
    if violations:
        summary = "; ".join(f"{v.kind}: {v.message}" for v in violations[:5])
        raise InvalidOntology(summary)
    lines = [PREFIX_LINE, f'ont:{ontology.ontology_id} ont:kind "{ontology.kind}" .']

    def check_text(text: str) -> str:
        if "\n" in text or "\r" in text:
            raise InvalidOntology(f"line break in literal {text!r}")
        return _escape(text)

    for cid in sorted(ontology.concepts):
        concept = ontology.concepts[cid]
        lines.append(f'ont:{cid} ont:label "{check_text(concept.preferred_label)}" .')
        for syn in sorted(concept.synonyms):
            lines.append(f'ont:{cid} ont:syn "{check_text(syn)}" .')
        if concept.definition is not None:
            lines.append(f'ont:{cid} ont:def "{check_text(concept.definition)}" .')
    for r in sorted(ontology.relations, key=lambda r: r.triple()):
        lines.append(f"ont:{r.subject} ont:{r.predicate} ont:{r.object} .")
    return "\n".join(lines) + "\n"


_HEADER_RE = re.compile(r'^ont:(\S+) ont:kind "((?:[^"\\]|\\.)*)" \.$')
_LITERAL_RE = re.compile(r'^ont:(\S+) ont:(label|syn|def) "((?:[^"\\]|\\.)*)" \.$')
_RELATION_RE = re.compile(r"^ont:(\S+) ont:([A-Za-z]+) ont:(\S+) \.$")


def import_triples(text: str) -> Ontology:
    """Parse a serialized ontology. Grammar errors raise ParseError /
    UnknownPredicate with the offending line number; semantic problems
    (dangling endpoints, cycles, ...) are left for validate()."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != PREFIX_LINE:
        raise ParseError(f"expected {PREFIX_LINE!r}", 1)
    if len(lines) < 2:
        raise ParseError("missing ontology header", 2)
    header = _HEADER_RE.match(lines[1])
    if not header:
        raise ParseError("expected ontology kind header", 2)
    ontology_id, raw_kind = header.group(1), header.group(2)
    if not is_slug(ontology_id):
        raise ParseError(f"malformed ontology id {ontology_id!r}", 2)
    kind = _unescape(raw_kind, 2)
    if kind not in KINDS:
        raise ParseError(f"unknown ontology kind {kind!r}", 2)
    mutability = "dynamic" if kind == "task" else "static"
    ontology = Ontology(ontology_id, kind=kind, mutability=mutability)

    def stub(cid: str, line_no: int) -> Concept:
        if not is_slug(cid):
            raise ParseError(f"malformed concept id {cid!r}", line_no)
        if cid not in ontology.concepts:
            ontology.concepts[cid] = Concept(cid, "")
        return ontology.concepts[cid]

    for line_no, line in enumerate(lines[2:], start=3):
        literal = _LITERAL_RE.match(line)
        if literal:
            cid, prop, raw = literal.groups()
            value = _unescape(raw, line_no)
            concept = stub(cid, line_no)
            if prop == "label":
                concept.preferred_label = value
                concept.synonyms.discard(value)
            elif prop == "syn":
                if value != concept.preferred_label:
                    concept.synonyms.add(value)
            else:
                concept.definition = value
            continue
        relation = _RELATION_RE.match(line)
        if relation:
            subject, predicate, obj = relation.groups()
            if predicate not in PREDICATES:
                raise UnknownPredicate(f"unknown predicate ont:{predicate}", line_no)
            for endpoint in (subject, obj):
                if not is_slug(endpoint):
                    raise ParseError(f"malformed concept id {endpoint!r}", line_no)
            ontology.relations.append(Relation(subject, predicate, obj))
            continue
        raise ParseError(f"unparseable statement {line!r}", line_no)
    return ontology


class OntologyLibrary:
    """Directory-backed versioned store. Versions are dense 1..max per
    ontology id, write-once, and verified by checksum on load."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._catalog_path = self.root / "catalog.json"
        self._lock = threading.Lock()

    def _read_catalog(self) -> dict:
        if self._catalog_path.exists():
            return json.loads(self._catalog_path.read_text(encoding="utf-8"))
        return {}

    def _write_catalog(self, catalog: dict) -> None:
        tmp = self._catalog_path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(catalog, ensure_ascii=False, indent=1, sort_keys=True),
            encoding="utf-8",
        )
        tmp.replace(self._catalog_path)

    def store(self, ontology: Ontology) -> tuple[str, int]:
        payload = export_triples(ontology).encode("utf-8")
        with self._lock:
            catalog = self._read_catalog()
            entry = catalog.setdefault(ontology.ontology_id, {})
            version = max((int(v) for v in entry), default=0) + 1
            rel_path = f"{ontology.ontology_id}/v{version}.ttl"
            target = self.root / rel_path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(payload)
            entry[str(version)] = {
                "path": rel_path,
                "checksum": hashlib.sha256(payload).hexdigest(),
            }
            self._write_catalog(catalog)
        return ontology.ontology_id, version

    def versions(self, ontology_id: str) -> list[int]:
        entry = self._read_catalog().get(ontology_id)
        if not entry:
            raise NotFound(ontology_id)
        return sorted(int(v) for v in entry)

    def ontology_ids(self) -> list[str]:
        return sorted(self._read_catalog())

    def load(self, ontology_id: str, version: int | None = None) -> Ontology:
        catalog = self._read_catalog()
        entry = catalog.get(ontology_id)
        if not entry:
            raise NotFound(ontology_id)
        if version is None:
            version = max(int(v) for v in entry)
        meta = entry.get(str(version))
        if meta is None:
            raise NotFound(f"{ontology_id} v{version}")
        payload = (self.root / meta["path"]).read_bytes()
        digest = hashlib.sha256(payload).hexdigest()
        if digest != meta["checksum"]:
            raise ChecksumMismatch(f"{ontology_id} v{version}")
        ontology = import_triples(payload.decode("utf-8"))
        ontology.version = version
        return ontology
