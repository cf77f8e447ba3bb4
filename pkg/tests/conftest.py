from pathlib import Path

import pytest

from ontoforge import bundled_data_dir
from ontoforge.control import ProjectManifest, create_project
from ontoforge.linguistic import Lexicon

DATA = bundled_data_dir()


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return Lexicon.load(DATA / "lexicon.tsv")


def manifest_payload(project_id: str, root: Path, **overrides) -> dict:
    payload = {
        "project_id": project_id,
        "domain": {
            "name": "обработка текстов",
            "seed_lemmas": ["онтология", "текст", "процессор", "знание"],
            "lexicon": str(DATA / "lexicon.tsv"),
            "patterns": str(DATA / "patterns.txt"),
            "relevance_threshold": 0.0,
        },
        "architecture": {
            "storage_root": str(root),
            "library": str(root / "_library"),
            "port": 8741,
            "max_iterations": 10,
        },
    }
    for dotted, value in overrides.items():
        section, _, key = dotted.partition(".")
        if key:
            payload[section][key] = value
        else:
            payload[section] = value
    return payload


def make_project(tmp_path: Path, project_id: str = "toyproj", docs: str = "toy_corpus", **overrides):
    """Create a project and ingest one of the bundled fixture corpora."""
    manifest = ProjectManifest.from_dict(manifest_payload(project_id, tmp_path, **overrides))
    project = create_project(manifest)
    if docs:
        for doc in sorted((DATA / docs).glob("*.txt")):
            project.store.ingest(str(doc))
    return project


@pytest.fixture
def toy_project(tmp_path):
    return make_project(tmp_path)
