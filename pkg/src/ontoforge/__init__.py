"""OntoForge: build domain ontologies from text corpora and run linked
object/process/task workflows over them."""

from pathlib import Path

__version__ = "0.1.0"


def bundled_data_dir() -> Path:
    """Directory with the bundled fixtures: toy lexicon, pattern file, seed
    ontology, sample corpora and the patent triad."""
    return Path(__file__).resolve().parent / "data"
