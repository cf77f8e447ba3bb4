"""The iterative build loop: run the configured stages over the project,
feed new candidates and queries into the decision queue, fold approved
material into the project ontology, and decide whether to keep going.

Stop policy, in order: converged (an executed iteration produced no new
candidates and saw no approvals), iteration limit, user-requested stop,
otherwise continue.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from ..corpus import build_index, score_relevance, select_corpus
from ..errors import OntoForgeError
from ..extraction import (
    RelationEvidence,
    apply_scores,
    flag_lexical_ambiguity,
    harvest,
    mine_assoc,
    mine_isa,
)
from ..linguistic import POS_TAGS, analyze
from ..ontology import Concept, CycleError, Relation, slugify
from .project import Project, ProjectManifest
from .queue import AMBIGUITY, CANDIDATE, HOMONYMY, STOP, AlreadyResolved

logger = logging.getLogger(__name__)


class IterationInProgress(OntoForgeError):
    pass


class StageFailure(OntoForgeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class InvalidResolution(OntoForgeError):
    pass


@dataclass
class IterationReport:
    iteration: int
    docs_processed: int = 0
    new_candidates: int = 0
    approved: int = 0
    concepts_total: int = 0
    relations_total: int = 0
    pending_decisions: int = 0
    stop: bool = False
    reason: str = "continue"

    def to_dict(self) -> dict:
        return asdict(self)


def should_stop(
    report: IterationReport, manifest: ProjectManifest, stop_requested: bool = False
) -> tuple[bool, str]:
    if report.new_candidates == 0 and report.approved == 0:
        return True, "converged"
    if report.iteration >= manifest.max_iterations:
        return True, "max_iterations"
    if stop_requested:
        return True, "user_stop"
    return False, "continue"


def _candidate_item_id(text: str) -> str:
    return f"cand:{text}"


def _homonymy_item_id(doc_id: int, sentence_id: int, offset: int) -> str:
    return f"hom:{doc_id}:{sentence_id}:{offset}"


def _ambiguity_item_id(text: str) -> str:
    return f"amb:{text}"


class _Lock:
    """Single-writer-per-project lock file. ``wait`` > 0 retries briefly so
    short mutations (decisions) queue up behind a running iteration instead
    of failing outright."""

    def __init__(self, path: Path, wait: float = 0.0):
        self.path = path
        self.wait = wait

    def __enter__(self):
        deadline = time.monotonic() + self.wait
        while True:
            try:
                fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                break
            except FileExistsError:
                if time.monotonic() >= deadline:
                    raise IterationInProgress(str(self.path)) from None
                time.sleep(0.05)
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


def run_iteration(project: Project) -> IterationReport:
    """Execute one pass of the configured stages. A second caller on the
    same project gets IterationInProgress while the pass runs; once the
    iteration limit is reached the stages are skipped entirely."""
    manifest = project.manifest
    with _Lock(project.path / ".lock"):
        state = project.load_state()
        ontology = project.ontology()
        if state["iteration"] >= manifest.max_iterations:
            return IterationReport(
                iteration=state["iteration"],
                concepts_total=len(ontology.concepts),
                relations_total=len(ontology.relations),
                pending_decisions=len(project.queue.pending()),
                stop=True,
                reason="max_iterations",
            )
        iteration = state["iteration"] + 1
        report = IterationReport(iteration=iteration, approved=state["approved_since_report"])
        stage = "search"
        try:
            corpus = None
            analyses: dict[int, object] = {}
            members: list = []
            if "search" in manifest.stages:
                docs = project.store.records()
                for doc in docs:
                    project.store.set_relevance(
                        doc.doc_id,
                        score_relevance(doc, manifest.seed_lemmas, project.lexicon),
                    )
                corpus = select_corpus(
                    docs, manifest.relevance_threshold, manifest.project_id
                )
                members = [project.store.get(d) for d in corpus.members]
                if not corpus.members:
                    logger.warning(
                        "project %s: corpus is empty at threshold %s",
                        manifest.project_id,
                        manifest.relevance_threshold,
                    )
                report.docs_processed = len(members)

            stage = "linguistic"
            if "linguistic" in manifest.stages:
                for doc in members:
                    analysis = analyze(
                        doc.body,
                        project.lexicon,
                        doc_id=doc.doc_id,
                        overrides=project.overrides_for(doc.doc_id),
                        use_bigrams=manifest.cascade,
                    )
                    analyses[doc.doc_id] = analysis
                    for query in analysis.queries:
                        project.queue.add(
                            _homonymy_item_id(
                                query.doc_id, query.sentence_id, query.offset
                            ),
                            HOMONYMY,
                            {
                                "doc_id": query.doc_id,
                                "sentence_id": query.sentence_id,
                                "offset": query.offset,
                                "surface": query.surface,
                                "candidates": [
                                    {"lemma": c.lemma, "pos": c.pos}
                                    for c in query.candidates
                                ],
                            },
                        )

            stage = "extraction"
            stored = project.load_candidates()
            if "extraction" in manifest.stages and analyses:
                chunks_by_doc = {
                    doc_id: analysis.chunks for doc_id, analysis in analyses.items()
                }
                harvested = harvest(chunks_by_doc)
                index = build_index(members, project.lexicon)
                apply_scores(
                    harvested,
                    index,
                    tfidf=manifest.scorer in ("tfidf", "both"),
                    cvalue=manifest.scorer in ("cvalue", "both"),
                )
                for key in sorted(harvested, key=" ".join):
                    candidate = harvested[key]
                    entry = stored.get(candidate.text)
                    if entry is None:
                        stored[candidate.text] = {
                            "normal_form": list(key),
                            "freq": candidate.freq,
                            "doc_freq": candidate.doc_freq,
                            "tfidf": candidate.tfidf,
                            "cvalue": candidate.cvalue,
                            "status": "pending",
                            "provenance": sorted(candidate.provenance),
                            "surface_variants": sorted(candidate.surface_variants),
                        }
                        report.new_candidates += 1
                        project.queue.add(
                            _candidate_item_id(candidate.text),
                            CANDIDATE,
                            {
                                "normal_form": list(key),
                                "text": candidate.text,
                                "freq": candidate.freq,
                                "doc_freq": candidate.doc_freq,
                                "tfidf": candidate.tfidf,
                                "cvalue": candidate.cvalue,
                            },
                        )
                    elif entry["status"] == "rejected":
                        continue  # frozen out of future harvests
                    else:
                        entry.update(
                            freq=candidate.freq,
                            doc_freq=candidate.doc_freq,
                            tfidf=candidate.tfidf,
                            cvalue=candidate.cvalue,
                            provenance=sorted(candidate.provenance),
                            surface_variants=sorted(candidate.surface_variants),
                        )
                active = {
                    key
                    for key in harvested
                    if stored[" ".join(key)]["status"] != "rejected"
                }
                rows = []
                sentence_count = 0
                for doc_id in sorted(analyses):
                    rows.extend(analyses[doc_id].sentence_lemma_rows())
                    sentence_count += len(analyses[doc_id].sentences)
                evidence = mine_isa(rows, active, project.patterns)
                evidence += mine_assoc(
                    chunks_by_doc, sentence_count, manifest.tau, active
                )
                project.save_evidence(
                    [
                        {
                            "subject": list(e.subject),
                            "predicate": e.predicate,
                            "object": list(e.object),
                            "pattern_id": e.pattern_id,
                            "doc_id": e.doc_id,
                            "sentence_id": e.sentence_id,
                            "weight": e.weight,
                        }
                        for e in evidence
                    ]
                )
                for key in sorted(active, key=" ".join):
                    query = flag_lexical_ambiguity(key, evidence)
                    if query is not None:
                        project.queue.add(
                            _ambiguity_item_id(query.text),
                            AMBIGUITY,
                            {
                                "normal_form": list(key),
                                "text": query.text,
                                "group_a": list(query.group_a),
                                "group_b": list(query.group_b),
                            },
                        )
                project.save_candidates(stored)

            stage = "representation"
            if "representation" in manifest.stages:
                _fold_approved(project, stored, ontology)
                project.save_ontology(ontology)
                project.snapshot_to_library(ontology)
        except Exception as exc:
            failure = {
                "iteration": iteration,
                "failed_stage": stage,
                "error": str(exc),
            }
            project._write_json(f"reports/report_{iteration:04d}.json", failure)
            raise StageFailure(stage, exc) from exc

        report.concepts_total = len(ontology.concepts)
        report.relations_total = len(ontology.relations)
        report.pending_decisions = len(project.queue.pending())

        # the report hits disk before the stop decision is evaluated
        project._write_json(f"reports/report_{iteration:04d}.json", report.to_dict())
        state.update(iteration=iteration, approved_since_report=0, dirty_docs=[])
        project.save_state(state)

        report.stop, report.reason = should_stop(
            report, manifest, project.queue.stop_requested()
        )
        project._write_json(f"reports/report_{iteration:04d}.json", report.to_dict())
        return report


def _fold_approved(project: Project, stored: dict[str, dict], ontology) -> None:
    """Representation stage: make sure every approved candidate has its
    concept, then add mined relations whose endpoints are both approved."""
    for text in sorted(stored):
        entry = stored[text]
        if entry["status"] != "approved":
            continue
        cid = entry.get("concept_id")
        if cid is None or cid not in ontology.concepts:
            cid = _ensure_concept(ontology, text, entry)
            entry["concept_id"] = cid
    project.save_candidates(stored)

    concept_of = {
        text: entry["concept_id"]
        for text, entry in stored.items()
        if entry["status"] == "approved" and entry.get("concept_id")
    }
    evidence = [
        RelationEvidence(
            tuple(e["subject"]),
            e["predicate"],
            tuple(e["object"]),
            e["pattern_id"],
            e["doc_id"],
            e["sentence_id"],
            e["weight"],
        )
        for e in project.load_evidence()
    ]
    evidence.sort(key=lambda e: (e.predicate, e.subject_text, e.object_text))
    known = {r.triple() for r in ontology.relations}
    for e in evidence:
        subject = concept_of.get(e.subject_text)
        obj = concept_of.get(e.object_text)
        if subject is None or obj is None:
            continue
        relation = Relation(
            subject,
            e.predicate,
            obj,
            e.weight,
            provenance=f"{e.pattern_id}@{e.doc_id}:{e.sentence_id}",
        )
        if relation.triple() in known:
            continue
        try:
            ontology.add_relation(relation)
            known.add(relation.triple())
        except CycleError:
            logger.info("skipping cycle-closing relation %s", relation.triple())


def _ensure_concept(ontology, text: str, entry: dict) -> str:
    base = slugify(text)
    cid = base
    n = 2
    while cid in ontology.concepts:
        cid = f"{base}_{n}"
        n += 1
    ontology.add_concept(
        Concept(cid, text, sources=set(entry.get("provenance", ())))
    )
    return cid


def apply_decision(
    project: Project, item_id: str, resolution: dict, actor: str = "engineer"
) -> dict:
    """Resolve one pending queue item and apply its side effects: approval
    creates a concept, rejection freezes the candidate, a homonymy
    resolution overrides the annotation and re-queues the document for
    re-analysis, an ambiguity split mints one sense concept per
    neighbourhood group, a stop resolution latches the user stop."""
    with _Lock(project.path / ".lock", wait=5.0):
        return _apply_decision_locked(project, item_id, resolution, actor)


def _apply_decision_locked(
    project: Project, item_id: str, resolution: dict, actor: str
) -> dict:
    queue = project.queue
    item = queue.get(item_id)
    if item.resolution is not None:
        raise AlreadyResolved(item_id)
    if not isinstance(resolution, dict):
        raise InvalidResolution("resolution must be an object")

    if item.kind == CANDIDATE:
        action = resolution.get("action")
        if action not in ("approve", "reject"):
            raise InvalidResolution(f"candidate resolution needs action approve|reject, got {action!r}")
        stored = project.load_candidates()
        entry = stored.get(item.payload["text"])
        if entry is None:
            raise InvalidResolution(f"no stored candidate {item.payload['text']!r}")
        if action == "approve":
            entry["status"] = "approved"
            ontology = project.ontology()
            cid = entry.get("concept_id")
            if cid is None or cid not in ontology.concepts:
                entry["concept_id"] = _ensure_concept(
                    ontology, item.payload["text"], entry
                )
                project.save_ontology(ontology)
            state = project.load_state()
            state["approved_since_report"] = state.get("approved_since_report", 0) + 1
            project.save_state(state)
        else:
            entry["status"] = "rejected"
        project.save_candidates(stored)

    elif item.kind == HOMONYMY:
        lemma, pos = resolution.get("lemma"), resolution.get("pos")
        if not lemma or pos not in POS_TAGS:
            raise InvalidResolution("homonymy resolution needs lemma and a valid pos")
        project.add_override(
            item.payload["doc_id"],
            item.payload["sentence_id"],
            item.payload["offset"],
            lemma,
            pos,
        )
        state = project.load_state()
        dirty = set(state.get("dirty_docs", []))
        dirty.add(item.payload["doc_id"])
        state["dirty_docs"] = sorted(dirty)
        project.save_state(state)

    elif item.kind == AMBIGUITY:
        if resolution.get("action") != "split":
            raise InvalidResolution("ambiguity resolution needs action=split")
        text = item.payload["text"]
        stored = project.load_candidates()
        entry = stored.get(text)
        ontology = project.ontology()
        sense_ids = []
        for n, group in enumerate((item.payload["group_a"], item.payload["group_b"]), 1):
            cid = _ensure_concept(
                ontology,
                f"{text} ({n})",
                {"provenance": entry.get("provenance", []) if entry else []},
            )
            ontology.concepts[cid].definition = "контекст: " + ", ".join(group)
            sense_ids.append(cid)
        project.save_ontology(ontology)
        if entry is not None:
            entry["status"] = "rejected"  # the composite is frozen; senses replace it
            entry["sense_concepts"] = sense_ids
            project.save_candidates(stored)

    elif item.kind == STOP:
        if resolution.get("action") != "stop":
            raise InvalidResolution("stop resolution needs action=stop")

    else:
        raise InvalidResolution(f"unknown item kind {item.kind!r}")

    resolved = queue.resolve(item_id, resolution, actor)
    return {
        "item_id": resolved.item_id,
        "kind": resolved.kind,
        "resolved_at": resolved.resolved_at,
        "actor": resolved.actor,
    }
