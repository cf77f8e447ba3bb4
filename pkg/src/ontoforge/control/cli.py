"""Command-line interface.

Exit codes: 0 on success, 1 on a domain error, 2 on a usage error
(argparse's own convention).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import OntoForgeError
from ..integration import align, convergence_clusters, merge, merge_report_lines
from ..ontology import OntologyLibrary, export_triples, import_triples
from ..taskflow import execute, load_triad, render_trace
from .iteration import apply_decision, run_iteration
from .project import Project, ProjectManifest, create_project


def _open_project(args) -> Project:
    return Project.open(Path(args.root) / args.project)


def cmd_init(args) -> int:
    payload = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    manifest = ProjectManifest.from_dict(payload)
    project = create_project(manifest)
    print(f"created project {project.manifest.project_id} at {project.path}")
    return 0


def cmd_ingest(args) -> int:
    project = _open_project(args)
    sources: list[str] = []
    if args.url:
        sources.append(args.url)
    if args.path:
        target = Path(args.path)
        if target.is_dir():
            sources.extend(str(p) for p in sorted(target.glob("*.txt")))
        else:
            sources.append(str(target))
    if not sources:
        print("error: nothing to ingest (need --path or --url)", file=sys.stderr)
        return 1
    for source in sources:
        result = project.store.ingest(source)
        flag = " (duplicate)" if result.duplicate else ""
        print(f"doc {result.record.doc_id}: {source}{flag}")
    return 0


def cmd_iterate(args) -> int:
    report = run_iteration(_open_project(args))
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=1))
    return 0


def cmd_decide(args) -> int:
    resolution = {"action": "approve"} if args.approve else {"action": "reject"}
    result = apply_decision(_open_project(args), args.item, resolution, actor="cli")
    print(f"{result['item_id']}: resolved")
    return 0


def cmd_export(args) -> int:
    project = _open_project(args)
    Path(args.out).write_text(export_triples(project.ontology()), encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def cmd_merge(args) -> int:
    left = import_triples(Path(args.left).read_text(encoding="utf-8"))
    right = import_triples(Path(args.right).read_text(encoding="utf-8"))
    matches = align(left, right)
    report: list[dict] = []
    merged = merge(left, right, matches, report=report)
    Path(args.out).write_text(export_triples(merged), encoding="utf-8")
    if args.report:
        Path(args.report).write_text(merge_report_lines(report), encoding="utf-8")
    else:
        sys.stdout.write(merge_report_lines(report))
    print(f"wrote {args.out} ({len(matches)} matches)")
    return 0


def cmd_converge(args) -> int:
    library = OntologyLibrary(args.lib)
    ontologies = [library.load(oid) for oid in library.ontology_ids()]
    clusters = convergence_clusters(ontologies, args.k)
    for cluster in clusters:
        print(
            json.dumps(
                {
                    "label": cluster.label,
                    "support": cluster.support,
                    "members": [list(m) for m in cluster.members],
                },
                ensure_ascii=False,
            )
        )
    return 0


def cmd_run_task(args) -> int:
    project = _open_project(args)
    triad = load_triad(args.objects, args.processes, args.tasks, args.links)
    trace, artifacts = execute(triad, context={"project": args.project})
    rendered = render_trace(trace)
    runs_dir = project.path / "task_runs"
    run_id = f"run_{len(list(runs_dir.glob('run_*'))) + 1:04d}"
    run_dir = runs_dir / run_id
    run_dir.mkdir(parents=True)
    (run_dir / "trace.txt").write_text(rendered, encoding="utf-8")
    for artifact in artifacts:
        (run_dir / artifact.name).write_text(artifact.body, encoding="utf-8")
    sys.stdout.write(rendered)
    print(f"run {run_id}: {len(artifacts)} artifacts")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    app = create_app(Path(args.root))
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit as exc:  # uvicorn wraps bind errors
        raise OntoForgeError(f"could not serve on port {args.port}") from exc
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontoforge",
        description="Build domain ontologies from text corpora and run task/process/object workflows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_project(p):
        p.add_argument("--project", required=True, help="project id")
        p.add_argument("--root", default=".", help="storage root containing projects")
        return p

    p = sub.add_parser("init", help="create a project from a manifest file")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_init)

    p = with_project(sub.add_parser("ingest", help="ingest documents"))
    p.add_argument("--path", help="text file or directory of *.txt files")
    p.add_argument("--url", help="http(s) source")
    p.set_defaults(func=cmd_ingest)

    p = with_project(sub.add_parser("iterate", help="run one build iteration"))
    p.set_defaults(func=cmd_iterate)

    p = with_project(sub.add_parser("decide", help="resolve a queue item"))
    p.add_argument("--item", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--approve", action="store_true")
    group.add_argument("--reject", action="store_true")
    p.set_defaults(func=cmd_decide)

    p = with_project(sub.add_parser("export", help="export the project ontology"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("merge", help="align and merge two ontology files")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="write the merge report (JSON lines) here")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("converge", help="convergence clusters across a library")
    p.add_argument("--lib", required=True)
    p.add_argument("--k", type=int, default=2)
    p.set_defaults(func=cmd_converge)

    p = with_project(sub.add_parser("run-task", help="execute a task/process/object triad"))
    p.add_argument("--objects", required=True)
    p.add_argument("--processes", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--links", required=True)
    p.set_defaults(func=cmd_run_task)

    p = sub.add_parser("serve", help="run the workbench HTTP API")
    p.add_argument("--port", type=int, default=8741)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--root", default=".")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OntoForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
