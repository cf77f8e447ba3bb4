"""Project manifests and on-disk project layout.

A manifest is one JSON document whose top-level keys mirror the tool's
model tuple: ``stages`` (the ordered process list), ``bindings`` (the
algorithm choice per stage), ``domain`` (the subject-area configuration:
seed lemmas, lexicon, patterns, relevance threshold) and ``architecture``
(storage root, ontology library, service port, iteration limit).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import OntoForgeError
from ..corpus import DocumentStore
from ..extraction import Pattern, load_patterns
from ..linguistic import Analysis, Lexicon
from ..ontology import (
    Ontology,
    OntologyLibrary,
    export_triples,
    import_triples,
    is_slug,
)
from .queue import DecisionQueue

STAGES = ("search", "linguistic", "extraction", "representation")

DEFAULT_BINDINGS = {
    "search": {},
    "linguistic": {"cascade": True},
    "extraction": {"scorer": "both", "tau": 0.5},
    "representation": {},
}


class InvalidManifest(OntoForgeError):
    pass


class StorageUnwritable(OntoForgeError):
    pass


@dataclass
class ProjectManifest:
    project_id: str
    domain_name: str
    seed_lemmas: list[str]
    lexicon_path: Path
    patterns_path: Path
    relevance_threshold: float
    storage_root: Path
    library_path: Path
    port: int
    max_iterations: int
    stages: list[str] = field(default_factory=lambda: list(STAGES))
    bindings: dict[str, dict] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, payload: dict) -> "ProjectManifest":
        if not isinstance(payload, dict):
            raise InvalidManifest("manifest must be a JSON object")

        def need(container: dict, key: str, where: str):
            if key not in container or container[key] in (None, ""):
                raise InvalidManifest(f"missing field: {where}")
            return container[key]

        project_id = need(payload, "project_id", "project_id")
        if not is_slug(str(project_id)):
            raise InvalidManifest("project_id: must be a slug (lowercase/digits/_)")
        domain = need(payload, "domain", "domain")
        if not isinstance(domain, dict):
            raise InvalidManifest("domain: must be an object")
        architecture = need(payload, "architecture", "architecture")
        if not isinstance(architecture, dict):
            raise InvalidManifest("architecture: must be an object")

        stages = payload.get("stages") or list(STAGES)
        if not stages:
            raise InvalidManifest("stages: must not be empty")
        for stage in stages:
            if stage not in STAGES:
                raise InvalidManifest(f"stages: unknown stage {stage!r}")

        bindings = dict(payload.get("bindings") or {})
        for stage in stages:
            merged = dict(DEFAULT_BINDINGS.get(stage, {}))
            merged.update(bindings.get(stage) or {})
            bindings[stage] = merged
        scorer = bindings.get("extraction", {}).get("scorer", "both")
        if scorer not in ("tfidf", "cvalue", "both"):
            raise InvalidManifest(f"bindings.extraction.scorer: unknown value {scorer!r}")

        seed_lemmas = need(domain, "seed_lemmas", "domain.seed_lemmas")
        if not isinstance(seed_lemmas, list) or not seed_lemmas:
            raise InvalidManifest("domain.seed_lemmas: must be a non-empty list")
        threshold = domain.get("relevance_threshold", 0.0)
        if not 0.0 <= float(threshold) <= 1.0:
            raise InvalidManifest("domain.relevance_threshold: must lie in [0, 1]")

        max_iterations = architecture.get("max_iterations", 10)
        if not isinstance(max_iterations, int) or max_iterations < 1:
            raise InvalidManifest("architecture.max_iterations: must be ≥ 1")
        port = architecture.get("port", 8741)

        return cls(
            project_id=str(project_id),
            domain_name=str(domain.get("name", project_id)),
            seed_lemmas=[str(s) for s in seed_lemmas],
            lexicon_path=Path(need(domain, "lexicon", "domain.lexicon")),
            patterns_path=Path(need(domain, "patterns", "domain.patterns")),
            relevance_threshold=float(threshold),
            storage_root=Path(need(architecture, "storage_root", "architecture.storage_root")),
            library_path=Path(need(architecture, "library", "architecture.library")),
            port=int(port),
            max_iterations=max_iterations,
            stages=list(stages),
            bindings=bindings,
        )

    def to_dict(self) -> dict:
        return {
            "project_id": self.project_id,
            "stages": list(self.stages),
            "bindings": self.bindings,
            "domain": {
                "name": self.domain_name,
                "seed_lemmas": list(self.seed_lemmas),
                "lexicon": str(self.lexicon_path),
                "patterns": str(self.patterns_path),
                "relevance_threshold": self.relevance_threshold,
            },
            "architecture": {
                "storage_root": str(self.storage_root),
                "library": str(self.library_path),
                "port": self.port,
                "max_iterations": self.max_iterations,
            },
        }

    @property
    def tau(self) -> float:
        return float(self.bindings.get("extraction", {}).get("tau", 0.5))

    @property
    def scorer(self) -> str:
        return self.bindings.get("extraction", {}).get("scorer", "both")

    @property
    def cascade(self) -> bool:
        return bool(self.bindings.get("linguistic", {}).get("cascade", True))

    def check_paths(self) -> None:
        for label, path in (
            ("domain.lexicon", self.lexicon_path),
            ("domain.patterns", self.patterns_path),
        ):
            if not Path(path).exists():
                raise InvalidManifest(f"{label}: path {path} does not exist")


class Project:
    """Handle over one project directory; all state lives on disk and every
    mutation is persisted immediately, so reopening resumes where the last
    process left off."""

    def __init__(self, path: Path, manifest: ProjectManifest):
        self.path = Path(path)
        self.manifest = manifest
        self.store = DocumentStore(self.path / "docs")
        self.queue = DecisionQueue(self.path / "queue" / "queue.json")
        self.library = OntologyLibrary(manifest.library_path)
        self._lexicon: Lexicon | None = None
        self._patterns: list[Pattern] | None = None

    @classmethod
    def open(cls, path: Path | str) -> "Project":
        path = Path(path)
        manifest_file = path / "project.json"
        if not manifest_file.exists():
            raise InvalidManifest(f"no project at {path}")
        manifest = ProjectManifest.from_dict(
            json.loads(manifest_file.read_text(encoding="utf-8"))
        )
        return cls(path, manifest)

    @property
    def lexicon(self) -> Lexicon:
        if self._lexicon is None:
            self._lexicon = Lexicon.load(self.manifest.lexicon_path)
        return self._lexicon

    @property
    def patterns(self) -> list[Pattern]:
        if self._patterns is None:
            self._patterns = load_patterns(self.manifest.patterns_path)
        return self._patterns

    # -- project ontology ---------------------------------------------------
    # the triple format carries no mutability or provenance, so the working
    # snapshot keeps a small sidecar next to current.ttl

    def ontology(self) -> Ontology:
        ontology = import_triples(
            (self.path / "ontology" / "current.ttl").read_text(encoding="utf-8")
        )
        ontology.mutability = "dynamic"  # the project KB is the dynamic component
        for cid, sources in self._json("ontology/meta.json", {}).get("sources", {}).items():
            if cid in ontology.concepts:
                ontology.concepts[cid].sources = set(sources)
        return ontology

    def save_ontology(self, ontology: Ontology) -> None:
        (self.path / "ontology" / "current.ttl").write_text(
            export_triples(ontology), encoding="utf-8"
        )
        self._write_json(
            "ontology/meta.json",
            {
                "sources": {
                    cid: sorted(concept.sources)
                    for cid, concept in ontology.concepts.items()
                    if concept.sources
                }
            },
        )

    def snapshot_to_library(self, ontology: Ontology) -> int | None:
        """Store a new library version when content changed; returns the new
        version number or None."""
        data = export_triples(ontology)
        try:
            latest = self.library.load(self.manifest.project_id)
            if export_triples(latest) == data:
                return None
        except OntoForgeError:
            pass
        _, version = self.library.store(ontology)
        return version

    # -- simple JSON state --------------------------------------------------

    def _json(self, name: str, default):
        path = self.path / name
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return default

    def _write_json(self, name: str, payload) -> None:
        path = self.path / name
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(
            json.dumps(payload, ensure_ascii=False, indent=1), encoding="utf-8"
        )
        tmp.replace(path)

    def load_state(self) -> dict:
        return self._json(
            "state.json", {"iteration": 0, "approved_since_report": 0, "dirty_docs": []}
        )

    def save_state(self, state: dict) -> None:
        self._write_json("state.json", state)

    def load_candidates(self) -> dict[str, dict]:
        return self._json("candidates.json", {})

    def save_candidates(self, candidates: dict[str, dict]) -> None:
        self._write_json("candidates.json", candidates)

    def load_evidence(self) -> list[dict]:
        return self._json("evidence.json", [])

    def save_evidence(self, evidence: list[dict]) -> None:
        self._write_json("evidence.json", evidence)

    # -- homonymy overrides ---------------------------------------------------

    def overrides_for(self, doc_id: int) -> dict[tuple[int, int], Analysis]:
        out = {}
        for entry in self._json("overrides.json", []):
            if entry["doc_id"] == doc_id:
                out[(entry["sentence_id"], entry["offset"])] = Analysis(
                    entry["lemma"], entry["pos"]
                )
        return out

    def add_override(
        self, doc_id: int, sentence_id: int, offset: int, lemma: str, pos: str
    ) -> None:
        entries = [
            e
            for e in self._json("overrides.json", [])
            if (e["doc_id"], e["sentence_id"], e["offset"])
            != (doc_id, sentence_id, offset)
        ]
        entries.append(
            {
                "doc_id": doc_id,
                "sentence_id": sentence_id,
                "offset": offset,
                "lemma": lemma,
                "pos": pos,
            }
        )
        self._write_json("overrides.json", entries)

    def annotations(self, doc_id: int):
        """Current analysis of one document with all overrides applied."""
        from ..linguistic import analyze

        record = self.store.get(doc_id)
        return analyze(
            record.body,
            self.lexicon,
            doc_id=doc_id,
            overrides=self.overrides_for(doc_id),
            use_bigrams=self.manifest.cascade,
        )

    # -- reports --------------------------------------------------------------

    def load_reports(self) -> list[dict]:
        reports_dir = self.path / "reports"
        reports = []
        for path in sorted(reports_dir.glob("report_*.json")):
            reports.append(json.loads(path.read_text(encoding="utf-8")))
        return reports


def create_project(manifest: ProjectManifest) -> Project:
    """Lay the project directory out under the storage root, register the
    empty (dynamic) project ontology in the library, seed the decision
    queue with the standing stop decision."""
    manifest.check_paths()
    root = Path(manifest.storage_root)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageUnwritable(f"{root}: {exc}") from exc
    project_dir = root / manifest.project_id
    if (project_dir / "project.json").exists():
        raise InvalidManifest(f"project_id: {manifest.project_id!r} already exists")
    try:
        for sub in ("docs", "ontology", "queue", "reports", "task_runs"):
            (project_dir / sub).mkdir(parents=True, exist_ok=True)
        (project_dir / "project.json").write_text(
            json.dumps(manifest.to_dict(), ensure_ascii=False, indent=1),
            encoding="utf-8",
        )
    except OSError as exc:
        raise StorageUnwritable(f"{project_dir}: {exc}") from exc

    project = Project(project_dir, manifest)
    empty = Ontology(manifest.project_id, kind="mixed", mutability="dynamic")
    project.save_ontology(empty)
    project.library.store(empty)
    project.queue.add(
        "stop", "stop", {"note": "resolve to request an early stop of the build loop"}
    )
    return project
