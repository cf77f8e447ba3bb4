import json

import pytest

from ontoforge.control.cli import main
from ontoforge.ontology import OntologyLibrary, import_triples

from conftest import DATA, manifest_payload


def write_manifest(tmp_path, project_id="cliproj", **overrides):
    payload = manifest_payload(project_id, tmp_path / "root", **overrides)
    manifest_file = tmp_path / "manifest.json"
    manifest_file.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
    return manifest_file


def test_full_cli_flow(tmp_path, capsys):
    manifest_file = write_manifest(tmp_path)
    root = str(tmp_path / "root")

    assert main(["init", "--manifest", str(manifest_file)]) == 0
    assert (
        main(
            ["ingest", "--project", "cliproj", "--root", root,
             "--path", str(DATA / "toy_corpus")]
        )
        == 0
    )
    assert main(["iterate", "--project", "cliproj", "--root", root]) == 0
    out = capsys.readouterr().out
    assert '"iteration": 1' in out

    assert (
        main(
            ["decide", "--project", "cliproj", "--root", root,
             "--item", "cand:словарь", "--approve"]
        )
        == 0
    )
    out_file = tmp_path / "exported.ttl"
    assert main(["export", "--project", "cliproj", "--root", root,
                 "--out", str(out_file)]) == 0
    exported = import_triples(out_file.read_text(encoding="utf-8"))
    assert "словарь" in exported.concepts


def test_double_decide_is_domain_error(tmp_path):
    manifest_file = write_manifest(tmp_path)
    root = str(tmp_path / "root")
    main(["init", "--manifest", str(manifest_file)])
    main(["ingest", "--project", "cliproj", "--root", root,
          "--path", str(DATA / "toy_corpus")])
    main(["iterate", "--project", "cliproj", "--root", root])
    assert main(["decide", "--project", "cliproj", "--root", root,
                 "--item", "cand:словарь", "--approve"]) == 0
    assert main(["decide", "--project", "cliproj", "--root", root,
                 "--item", "cand:словарь", "--reject"]) == 1


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["decide", "--project", "p"])  # --item and a verdict are required
    assert err.value.code == 2


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_domain_error_exits_1(tmp_path):
    assert main(["iterate", "--project", "ghost", "--root", str(tmp_path)]) == 1


def test_merge_and_converge_commands(tmp_path, capsys):
    seed = DATA / "smart_system.ttl"
    out = tmp_path / "merged.ttl"
    report = tmp_path / "report.jsonl"
    assert main(["merge", "--left", str(seed), "--right", str(seed),
                 "--out", str(out), "--report", str(report)]) == 0
    merged = import_triples(out.read_text(encoding="utf-8"))
    assert len(merged.concepts) == 20
    assert report.read_text(encoding="utf-8").count('"fuse"') == 20

    library_dir = tmp_path / "lib"
    library = OntologyLibrary(library_dir)
    library.store(import_triples(seed.read_text(encoding="utf-8")))
    other = import_triples(seed.read_text(encoding="utf-8"))
    other.ontology_id = "smart_copy"
    library.store(other)
    capsys.readouterr()
    assert main(["converge", "--lib", str(library_dir), "--k", "2"]) == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.strip().splitlines()]
    assert any(entry["label"] == "smart-система" for entry in lines)
    assert all(entry["support"] >= 2 for entry in lines)


def test_run_task_command(tmp_path, capsys):
    manifest_file = write_manifest(tmp_path)
    root = str(tmp_path / "root")
    main(["init", "--manifest", str(manifest_file)])
    triad = DATA / "triad"
    capsys.readouterr()
    assert (
        main(
            ["run-task", "--project", "cliproj", "--root", root,
             "--objects", str(triad / "objects.ttl"),
             "--processes", str(triad / "processes.ttl"),
             "--tasks", str(triad / "tasks.ttl"),
             "--links", str(triad / "links.tsv")]
        )
        == 0
    )
    out = capsys.readouterr().out
    golden = (triad / "golden_trace.txt").read_text(encoding="utf-8")
    assert out.startswith(golden)
    assert "3 artifacts" in out
    run_dir = tmp_path / "root" / "cliproj" / "task_runs" / "run_0001"
    assert (run_dir / "trace.txt").read_text(encoding="utf-8") == golden
