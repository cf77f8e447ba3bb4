"""Document ingestion and the linguistic corpus: a directory-backed
document store (one UTF-8 text file per document plus a docs.jsonl
manifest), seed-lemma relevance scoring, a lemma inverted index and
threshold-based corpus selection."""

from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import OntoForgeError
from .linguistic import Lexicon, analyze


class UnreadableSource(OntoForgeError):
    pass


class EmptySeedSet(OntoForgeError):
    pass


class RelevanceUnset(OntoForgeError):
    pass


@dataclass
class DocumentRecord:
    doc_id: int
    source_uri: str
    title: str
    body: str
    fetched_at: str  # ISO-8601 UTC
    relevance: float | None = None


@dataclass(frozen=True)
class IngestResult:
    record: DocumentRecord
    duplicate: bool


@dataclass
class CorpusIndex:
    doc_count: int
    postings: dict[str, list[tuple[int, int]]]  # lemma -> [(doc_id, tf)] asc
    doc_lengths: dict[int, int]


@dataclass(frozen=True)
class Corpus:
    project_id: str
    members: tuple[int, ...]  # doc ids, ascending
    threshold_used: float


Fetcher = Callable[[str], tuple[str, str]]


def default_fetcher(source: str) -> tuple[str, str]:
    """Resolve a locator to (title, body). Local paths and http(s) URLs are
    supported; anything unreadable or non-UTF-8 raises UnreadableSource."""
    if source.startswith(("http://", "https://")):
        try:
            with urllib.request.urlopen(source) as response:
                raw = response.read()
        except (urllib.error.URLError, OSError) as exc:
            raise UnreadableSource(f"{source}: {exc}") from exc
        title = source.rstrip("/").rsplit("/", 1)[-1] or source
    else:
        path = Path(source)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise UnreadableSource(f"{source}: {exc}") from exc
        title = path.stem
    try:
        body = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnreadableSource(f"{source}: not valid UTF-8 ({exc})") from exc
    return title, body


class DocumentStore:
    """Persists one body file per document plus a line-delimited JSON
    manifest. Ingestion of the same source_uri is idempotent; doc_id
    assignment is serialized under a lock."""

    MANIFEST = "docs.jsonl"

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._records: dict[int, DocumentRecord] = {}
        self._by_source: dict[str, int] = {}
        self._load()

    def _load(self) -> None:
        manifest = self.root / self.MANIFEST
        if not manifest.exists():
            return
        for line in manifest.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            meta = json.loads(line)
            doc_id = meta["doc_id"]
            body = (self.root / f"{doc_id}.txt").read_text(encoding="utf-8")
            record = DocumentRecord(
                doc_id=doc_id,
                source_uri=meta["source_uri"],
                title=meta["title"],
                body=body,
                fetched_at=meta["fetched_at"],
                relevance=meta["relevance"],
            )
            self._records[doc_id] = record
            self._by_source[record.source_uri] = doc_id

    def _persist(self) -> None:
        lines = []
        for doc_id in sorted(self._records):
            r = self._records[doc_id]
            lines.append(
                json.dumps(
                    {
                        "doc_id": r.doc_id,
                        "source_uri": r.source_uri,
                        "title": r.title,
                        "fetched_at": r.fetched_at,
                        "relevance": r.relevance,
                    },
                    ensure_ascii=False,
                )
            )
        tmp = self.root / (self.MANIFEST + ".tmp")
        tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        tmp.replace(self.root / self.MANIFEST)

    def ingest(self, source: str, fetcher: Fetcher | None = None) -> IngestResult:
        """Fetch and persist a document. Re-ingesting a known source_uri
        returns the existing record flagged as duplicate."""
        with self._lock:
            existing = self._by_source.get(source)
            if existing is not None:
                return IngestResult(self._records[existing], duplicate=True)
        title, body = (fetcher or default_fetcher)(source)
        with self._lock:
            existing = self._by_source.get(source)
            if existing is not None:
                return IngestResult(self._records[existing], duplicate=True)
            doc_id = max(self._records, default=0) + 1
            record = DocumentRecord(
                doc_id=doc_id,
                source_uri=source,
                title=title,
                body=body,
                fetched_at=datetime.now(timezone.utc).isoformat(),
            )
            (self.root / f"{doc_id}.txt").write_text(body, encoding="utf-8")
            self._records[doc_id] = record
            self._by_source[source] = doc_id
            self._persist()
            return IngestResult(record, duplicate=False)

    def records(self) -> list[DocumentRecord]:
        return [self._records[doc_id] for doc_id in sorted(self._records)]

    def get(self, doc_id: int) -> DocumentRecord:
        return self._records[doc_id]

    def __contains__(self, doc_id: int) -> bool:
        return doc_id in self._records

    def set_relevance(self, doc_id: int, value: float) -> None:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"relevance {value} outside [0, 1]")
        self._records[doc_id].relevance = value
        self._persist()


def score_relevance(
    doc: DocumentRecord, seed_lemmas: Iterable[str], lexicon: Lexicon
) -> float:
    """Fraction of distinct seed lemmas occurring in the document."""
    seeds = set(seed_lemmas)
    if not seeds:
        raise EmptySeedSet("relevance scoring needs at least one seed lemma")
    found = analyze(doc.body, lexicon, doc_id=doc.doc_id).lemma_set()
    return len(seeds & found) / len(seeds)


def build_index(docs: Sequence[DocumentRecord], lexicon: Lexicon) -> CorpusIndex:
    """Inverted index over resolved lemmas; unknown tokens are indexed
    under their lowercased-surface fallback lemma."""
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: dict[int, int] = {}
    for doc in sorted(docs, key=lambda d: d.doc_id):
        analysis = analyze(doc.body, lexicon, doc_id=doc.doc_id)
        counts: Counter[str] = Counter()
        total = 0
        for sentence in analysis.sentences:
            for token in sentence:
                total += 1
                if token.resolved is not None:
                    counts[token.resolved.lemma] += 1
        doc_lengths[doc.doc_id] = total
        for lemma, tf in counts.items():
            postings.setdefault(lemma, []).append((doc.doc_id, tf))
    return CorpusIndex(doc_count=len(docs), postings=postings, doc_lengths=doc_lengths)


def select_corpus(
    docs: Sequence[DocumentRecord], threshold: float, project_id: str = ""
) -> Corpus:
    """Members are exactly the documents with relevance ≥ threshold."""
    unset = [d.doc_id for d in docs if d.relevance is None]
    if unset:
        raise RelevanceUnset(f"documents without relevance: {unset}")
    members = tuple(
        sorted(d.doc_id for d in docs if d.relevance >= threshold)
    )
    return Corpus(project_id=project_id, members=members, threshold_used=threshold)
