"""Systemic integration of ontologies: label normalization, greedy lexical
alignment, provenance-preserving merge and convergence-cluster detection
across an ontology library."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Sequence

from .errors import OntoForgeError
from .ontology import Concept, Ontology, Relation


class InvalidMatch(OntoForgeError):
    pass


class InsufficientInput(OntoForgeError):
    pass


@dataclass(frozen=True)
class AlignmentMatch:
    left_ontology: str
    left: str
    right_ontology: str
    right: str
    score: float  # 1.0 label-equal, 0.9 synonym-overlap
    basis: str  # "label-equal" | "synonym-overlap"


@dataclass(frozen=True)
class ConvergenceCluster:
    label: str  # canonical normalized label
    members: tuple[tuple[str, str], ...]  # (ontology_id, concept_id)
    support: int  # number of distinct ontologies


def normalize_label(text: str) -> str:
    """NFC, case-fold, trim, collapse whitespace runs, map ё→е."""
    value = unicodedata.normalize("NFC", text).casefold()
    value = " ".join(value.split())
    return value.replace("ё", "е")


def _extended_labels(concept: Concept) -> set[str]:
    labels = {normalize_label(concept.preferred_label)}
    labels.update(normalize_label(s) for s in concept.synonyms)
    return labels


def align(a: Ontology, b: Ontology) -> list[AlignmentMatch]:
    """Greedy one-to-one lexical matching. Equal normalized labels score
    1.0; overlapping label+synonym sets with differing labels score 0.9.
    Ties always go to the lexicographically smallest counterpart id."""
    matches: list[AlignmentMatch] = []
    taken_b: set[str] = set()

    by_label: dict[str, list[str]] = {}
    for cid in sorted(b.concepts):
        by_label.setdefault(normalize_label(b.concepts[cid].preferred_label), []).append(cid)

    matched_a: set[str] = set()
    for a_cid in sorted(a.concepts):
        pool = by_label.get(normalize_label(a.concepts[a_cid].preferred_label), [])
        b_cid = next((c for c in pool if c not in taken_b), None)
        if b_cid is not None:
            taken_b.add(b_cid)
            matched_a.add(a_cid)
            matches.append(
                AlignmentMatch(a.ontology_id, a_cid, b.ontology_id, b_cid, 1.0, "label-equal")
            )

    b_extended = {cid: _extended_labels(c) for cid, c in b.concepts.items()}
    for a_cid in sorted(a.concepts):
        if a_cid in matched_a:
            continue
        a_concept = a.concepts[a_cid]
        a_ext = _extended_labels(a_concept)
        a_label = normalize_label(a_concept.preferred_label)
        for b_cid in sorted(b.concepts):
            if b_cid in taken_b:
                continue
            if normalize_label(b.concepts[b_cid].preferred_label) == a_label:
                continue  # equal labels only ever match in the first phase
            if a_ext & b_extended[b_cid]:
                taken_b.add(b_cid)
                matches.append(
                    AlignmentMatch(
                        a.ontology_id, a_cid, b.ontology_id, b_cid, 0.9, "synonym-overlap"
                    )
                )
                break
    matches.sort(key=lambda m: m.left)
    return matches


def _free_id(base: str, used: set[str]) -> str:
    if base not in used:
        return base
    n = 2
    while f"{base}_{n}" in used:
        n += 1
    return f"{base}_{n}"


def merge(
    a: Ontology,
    b: Ontology,
    matches: Sequence[AlignmentMatch],
    report: list[dict] | None = None,
) -> Ontology:
    """Fuse matched concept pairs (left id wins, labels/synonyms/sources
    union, right label demoted to a synonym when different), copy the rest,
    remap and deduplicate relations. Relations that would close an isA or
    decomposesTo cycle in the merged graph are skipped so the result always
    validates clean. Pass a list as ``report`` to collect one action dict
    per fuse/copy/skip."""
    for m in matches:
        if m.left not in a.concepts or m.right not in b.concepts:
            raise InvalidMatch(f"{m.left} / {m.right}")
    kind = a.kind if a.kind == b.kind else "mixed"
    mutability = (
        "static" if a.mutability == b.mutability == "static" else "dynamic"
    )
    merged = Ontology(
        f"{a.ontology_id}_{b.ontology_id}",
        name=f"{a.name} + {b.name}",
        kind=kind,
        mutability=mutability,
    )
    log = report if report is not None else []

    b_to_merged: dict[str, str] = {}
    matched_b = {m.right: m for m in matches}
    by_left = {m.left: m for m in matches}

    for a_cid in a.concepts:
        concept = a.concepts[a_cid].copy()
        m = by_left.get(a_cid)
        if m is not None:
            other = b.concepts[m.right]
            concept.synonyms |= other.synonyms
            if other.preferred_label != concept.preferred_label:
                concept.synonyms.add(other.preferred_label)
            concept.synonyms.discard(concept.preferred_label)
            concept.sources |= other.sources
            if concept.definition is None:
                concept.definition = other.definition
            b_to_merged[m.right] = a_cid
            log.append(
                {"action": "fuse", "left": a_cid, "right": m.right,
                 "score": m.score, "basis": m.basis}
            )
        else:
            log.append({"action": "copy", "side": "left", "concept": a_cid})
        merged.add_concept(concept)

    for b_cid in b.concepts:
        if b_cid in matched_b:
            continue
        concept = b.concepts[b_cid].copy()
        new_id = _free_id(b_cid, set(merged.concepts))
        concept.concept_id = new_id
        b_to_merged[b_cid] = new_id
        merged.add_concept(concept)
        log.append({"action": "copy", "side": "right", "concept": new_id})

    def push(relation: Relation, origin: str) -> None:
        triple = relation.triple()
        if any(r.triple() == triple for r in merged.relations):
            return  # duplicate after remapping
        if relation.subject == relation.object and relation.predicate != "assoc":
            log.append({"action": "skip_relation", "origin": origin,
                        "relation": list(triple), "reason": "self-loop"})
            return
        if relation.predicate in ("isA", "decomposesTo") and merged._reaches(
            relation.predicate, relation.object, relation.subject
        ):
            log.append({"action": "skip_relation", "origin": origin,
                        "relation": list(triple), "reason": "cycle"})
            return
        merged.relations.append(relation)

    for r in sorted(a.relations, key=lambda r: r.triple()):
        push(r, "left")
    for r in sorted(b.relations, key=lambda r: r.triple()):
        push(
            Relation(
                b_to_merged[r.subject],
                r.predicate,
                b_to_merged[r.object],
                r.weight,
                r.provenance,
            ),
            "right",
        )
    return merged


def merge_report_lines(report: Sequence[dict]) -> str:
    """Line-delimited JSON rendering of a merge report."""
    import json

    return "".join(json.dumps(entry, ensure_ascii=False) + "\n" for entry in report)


def convergence_clusters(
    ontologies: Sequence[Ontology], k: int = 2
) -> list[ConvergenceCluster]:
    """Group concepts across ontologies by normalized preferred label and
    keep groups supported by at least k distinct ontologies."""
    if k < 2:
        raise ValueError("k must be ≥ 2")
    if len(ontologies) < k:
        raise InsufficientInput(f"need at least {k} ontologies, got {len(ontologies)}")
    groups: dict[str, list[tuple[str, str]]] = {}
    for ontology in ontologies:
        for cid in sorted(ontology.concepts):
            label = normalize_label(ontology.concepts[cid].preferred_label)
            groups.setdefault(label, []).append((ontology.ontology_id, cid))
    clusters = []
    for label, members in groups.items():
        support = len({oid for oid, _ in members})
        if support >= k:
            clusters.append(
                ConvergenceCluster(label, tuple(members), support)
            )
    clusters.sort(key=lambda c: (-c.support, c.label))
    return clusters
