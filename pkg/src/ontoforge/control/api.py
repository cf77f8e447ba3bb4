"""HTTP JSON API for the workbench. Thin layer: every mutation goes
through the same apply_decision / run_iteration / create_project contracts
the CLI uses, and all state stays on disk under the service root."""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import OntoForgeError
from ..ontology import ChecksumMismatch, InvalidOntology, NotFound, ParseError
from ..taskflow import (
    HandlerFailure,
    InvalidTriad,
    KindMismatch,
    execute,
    load_triad,
    render_trace,
)
from .iteration import (
    InvalidResolution,
    IterationInProgress,
    StageFailure,
    apply_decision,
    run_iteration,
)
from .project import InvalidManifest, Project, ProjectManifest, create_project
from .queue import AlreadyResolved, UnknownItem

_STATUS_BY_ERROR = (
    ((UnknownItem, NotFound), 404),
    ((AlreadyResolved, IterationInProgress), 409),
    (
        (
            InvalidManifest,
            InvalidResolution,
            ParseError,
            InvalidOntology,
            KindMismatch,
            InvalidTriad,
            ChecksumMismatch,
            HandlerFailure,
            StageFailure,
        ),
        422,
    ),
)


def _status_for(exc: OntoForgeError) -> int:
    for types, status in _STATUS_BY_ERROR:
        if isinstance(exc, types):
            return status
    return 422


class _ProjectNotFound(NotFound):
    pass


def create_app(root: Path | str) -> FastAPI:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="ontoforge", version="0.1.0")

    @app.exception_handler(OntoForgeError)
    async def _domain_error(request: Request, exc: OntoForgeError):
        return JSONResponse({"error": str(exc)}, status_code=_status_for(exc))

    def open_project(project_id: str) -> Project:
        path = root / project_id
        if not (path / "project.json").exists():
            raise _ProjectNotFound(f"no project {project_id!r}")
        return Project.open(path)

    def summarize(project: Project) -> dict:
        state = project.load_state()
        return {
            "project_id": project.manifest.project_id,
            "domain": project.manifest.domain_name,
            "iterations": state["iteration"],
            "pending_decisions": len(project.queue.pending()),
        }

    @app.get("/projects")
    def list_projects():
        out = []
        for manifest_file in sorted(root.glob("*/project.json")):
            out.append(summarize(Project.open(manifest_file.parent)))
        return out

    @app.post("/projects", status_code=201)
    async def new_project(request: Request):
        try:
            payload = await request.json()
        except json.JSONDecodeError:
            raise InvalidManifest("request body is not valid JSON")
        if not isinstance(payload, dict):
            raise InvalidManifest("manifest must be a JSON object")
        architecture = dict(payload.get("architecture") or {})
        architecture.setdefault("storage_root", str(root))
        architecture.setdefault("library", str(root / "_library"))
        payload = {**payload, "architecture": architecture}
        manifest = ProjectManifest.from_dict(payload)
        if Path(manifest.storage_root).resolve() != root.resolve():
            raise InvalidManifest(
                "architecture.storage_root: must match the service root"
            )
        project = create_project(manifest)
        return {"project_id": project.manifest.project_id}

    @app.get("/projects/{project_id}")
    def project_detail(project_id: str):
        project = open_project(project_id)
        return {**summarize(project), "manifest": project.manifest.to_dict()}

    @app.get("/projects/{project_id}/candidates")
    def candidates(project_id: str, status: str | None = None):
        project = open_project(project_id)
        stored = project.load_candidates()
        rows = []
        for text in sorted(stored):
            entry = stored[text]
            if status and entry["status"] != status:
                continue
            rows.append(
                {
                    "item_id": f"cand:{text}",
                    "normal_form": text,
                    "freq": entry["freq"],
                    "doc_freq": entry["doc_freq"],
                    "tfidf": entry["tfidf"],
                    "cvalue": entry["cvalue"],
                    "status": entry["status"],
                }
            )
        return rows

    @app.get("/projects/{project_id}/queue")
    def queue(project_id: str, all: bool = False):
        project = open_project(project_id)
        items = project.queue.items() if all else project.queue.pending()
        return [
            {
                "item_id": item.item_id,
                "kind": item.kind,
                "payload": item.payload,
                "created_at": item.created_at,
                "resolved": item.resolution is not None,
            }
            for item in items
        ]

    @app.post("/projects/{project_id}/decisions")
    async def decide(project_id: str, request: Request):
        project = open_project(project_id)
        payload = await request.json()
        item_id = payload.get("item_id")
        resolution = payload.get("resolution")
        if not item_id or not isinstance(resolution, dict):
            raise InvalidResolution("body needs item_id and a resolution object")
        return apply_decision(
            project, item_id, resolution, actor=payload.get("actor", "workbench")
        )

    @app.post("/projects/{project_id}/iterations")
    def iterate(project_id: str):
        project = open_project(project_id)
        return run_iteration(project).to_dict()

    @app.get("/projects/{project_id}/reports")
    def reports(project_id: str):
        return open_project(project_id).load_reports()

    @app.get("/projects/{project_id}/ontology")
    def ontology_graph(project_id: str):
        ontology = open_project(project_id).ontology()
        return {
            "nodes": [
                {"id": cid, "label": concept.preferred_label}
                for cid, concept in sorted(ontology.concepts.items())
            ],
            "edges": [
                {"s": r.subject, "p": r.predicate, "o": r.object}
                for r in ontology.relations
            ],
        }

    @app.post("/projects/{project_id}/task-runs", status_code=201)
    async def start_task_run(project_id: str, request: Request):
        project = open_project(project_id)
        payload = await request.json()
        for key in ("objects", "processes", "tasks", "links"):
            if not payload.get(key):
                raise InvalidTriad(f"body needs the {key!r} file path")
        triad = load_triad(
            payload["objects"], payload["processes"], payload["tasks"], payload["links"]
        )
        trace, artifacts = execute(triad, context={"project": project_id})
        runs_dir = project.path / "task_runs"
        run_id = f"run_{len(list(runs_dir.glob('run_*'))) + 1:04d}"
        run_dir = runs_dir / run_id
        run_dir.mkdir(parents=True)
        rendered = render_trace(trace)
        (run_dir / "trace.txt").write_text(rendered, encoding="utf-8")
        (run_dir / "run.json").write_text(
            json.dumps(
                {
                    "run_id": run_id,
                    "events": [
                        {"seq": e.seq, "kind": e.kind, "node": e.node_id}
                        for e in trace.events
                    ],
                    "artifacts": [
                        {
                            "node": a.node_id,
                            "name": a.name,
                            "body": a.body,
                            "created_at": a.created_at,
                        }
                        for a in artifacts
                    ],
                },
                ensure_ascii=False,
            ),
            encoding="utf-8",
        )
        return {"run_id": run_id}

    @app.get("/projects/{project_id}/task-runs/{run_id}")
    def task_run(project_id: str, run_id: str):
        project = open_project(project_id)
        run_dir = project.path / "task_runs" / run_id
        if not (run_dir / "run.json").exists():
            raise NotFound(f"no task run {run_id!r}")
        payload = json.loads((run_dir / "run.json").read_text(encoding="utf-8"))
        payload["rendered"] = (run_dir / "trace.txt").read_text(encoding="utf-8")
        return payload

    return app
