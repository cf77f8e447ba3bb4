"""Term candidate harvesting and scoring, taxonomic/associative relation
mining, and the lexical-ambiguity probe.

Candidates are contiguous lemma sub-sequences (length 1–4) of noun-phrase
chunks; frequencies count every occurrence including occurrences nested in
longer candidates. TF-IDF is freq × ln(N/df); the containment-discounted
termhood score of candidate a is

    w(a) · f(a)                                 if nothing contains a
    w(a) · (f(a) − mean frequency of containers) otherwise

with w(a) = log2(|a| + 1) so single-word candidates weigh 1. Associative
evidence is pointwise mutual information over sentence-level occurrence
fractions.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import CorpusIndex
from .errors import OntoForgeError
from .linguistic import Chunk

MAX_TERM_LEN = 4

PENDING = "pending"
APPROVED = "approved"
REJECTED = "rejected"

NormalForm = tuple[str, ...]


class MalformedPattern(OntoForgeError):
    pass


@dataclass
class TermCandidate:
    normal_form: NormalForm
    surface_variants: set[str] = field(default_factory=set)
    freq: int = 0
    doc_freq: int = 0
    tfidf: float = 0.0
    cvalue: float = 0.0
    status: str = PENDING
    provenance: set[int] = field(default_factory=set)

    @property
    def text(self) -> str:
        return " ".join(self.normal_form)


@dataclass(frozen=True)
class RelationEvidence:
    subject: NormalForm
    predicate: str  # "isA" | "assoc"
    object: NormalForm
    pattern_id: str  # pattern id, or "pmi" for associations
    doc_id: int
    sentence_id: int
    weight: float

    @property
    def subject_text(self) -> str:
        return " ".join(self.subject)

    @property
    def object_text(self) -> str:
        return " ".join(self.object)


@dataclass(frozen=True)
class AmbiguityQuery:
    normal_form: NormalForm
    group_a: tuple[str, ...]  # texts of one neighbourhood component
    group_b: tuple[str, ...]  # texts of the other

    @property
    def text(self) -> str:
        return " ".join(self.normal_form)


@dataclass(frozen=True)
class Pattern:
    pattern_id: str
    tokens: tuple[str, ...]


def parse_patterns(text: str) -> list[Pattern]:
    """One template per line; tokens separated by single spaces, slots are
    the literal tokens X and Y, '#' starts a comment."""
    patterns: list[Pattern] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = tuple(line.split(" "))
        if tokens.count("X") != 1 or tokens.count("Y") != 1:
            raise MalformedPattern(
                f"line {line_no}: template must contain exactly one X and one Y"
            )
        patterns.append(Pattern(f"p{len(patterns) + 1}", tokens))
    return patterns


def load_patterns(path: Path | str) -> list[Pattern]:
    return parse_patterns(Path(path).read_text(encoding="utf-8"))


def _subsequences(lemmas: Sequence[str], max_len: int = MAX_TERM_LEN):
    n = len(lemmas)
    for length in range(1, min(max_len, n) + 1):
        for start in range(n - length + 1):
            yield start, tuple(lemmas[start : start + length])


def harvest(
    chunks_by_doc: Mapping[int, Sequence[Chunk]], max_len: int = MAX_TERM_LEN
) -> dict[NormalForm, TermCandidate]:
    """Every contiguous lemma sub-sequence (length 1..max_len) of every
    chunk becomes a candidate. Documents are processed in doc_id order so
    the merge is deterministic."""
    candidates: dict[NormalForm, TermCandidate] = {}
    for doc_id in sorted(chunks_by_doc):
        for ch in chunks_by_doc[doc_id]:
            for start, key in _subsequences(ch.lemmas, max_len):
                candidate = candidates.get(key)
                if candidate is None:
                    candidate = candidates[key] = TermCandidate(normal_form=key)
                candidate.freq += 1
                candidate.provenance.add(doc_id)
                candidate.surface_variants.add(
                    " ".join(ch.surfaces[start : start + len(key)])
                )
    for candidate in candidates.values():
        candidate.doc_freq = len(candidate.provenance)
    return candidates


def score_tfidf(
    candidate: TermCandidate, index: CorpusIndex, doc_freq: int | None = None
) -> float:
    """freq × ln(N / df), natural logarithm."""
    df = candidate.doc_freq if doc_freq is None else doc_freq
    if index.doc_count < 1 or df < 1:
        raise ValueError("tfidf needs doc_count ≥ 1 and doc_freq ≥ 1")
    return candidate.freq * math.log(index.doc_count / df)


def score_cvalue(
    candidates: Mapping[NormalForm, TermCandidate]
) -> dict[NormalForm, float]:
    """Containment-discounted termhood for the full harvested set."""
    container_count: Counter[NormalForm] = Counter()
    container_sum: Counter[NormalForm] = Counter()
    for key, candidate in candidates.items():
        if len(key) < 2:
            continue
        nested = {sub for _, sub in _subsequences(key, len(key) - 1)}
        for sub in nested:
            if sub in candidates:
                container_count[sub] += 1
                container_sum[sub] += candidate.freq
    scores: dict[NormalForm, float] = {}
    for key, candidate in candidates.items():
        weight = math.log2(len(key) + 1)
        if container_count[key] == 0:
            scores[key] = weight * candidate.freq
        else:
            mean = container_sum[key] / container_count[key]
            scores[key] = weight * (candidate.freq - mean)
    return scores


def apply_scores(
    candidates: Mapping[NormalForm, TermCandidate],
    index: CorpusIndex,
    *,
    tfidf: bool = True,
    cvalue: bool = True,
) -> None:
    if tfidf:
        for candidate in candidates.values():
            candidate.tfidf = score_tfidf(candidate, index)
    if cvalue:
        for key, value in score_cvalue(candidates).items():
            candidates[key].cvalue = value


LemmaRow = tuple[int, int, tuple]  # (doc_id, sentence_id, lemmas-or-None)


def _match_pattern(
    lemmas: Sequence[str | None],
    tokens: Sequence[str],
    keys: set[NormalForm],
    max_len: int = MAX_TERM_LEN,
):
    """Yield (x, y) bindings for every way the template matches a window of
    the sentence. Slots bind to 1..max_len contiguous lemmas that form an
    existing candidate."""

    def walk(pos: int, tok_idx: int, x: NormalForm | None, y: NormalForm | None):
        if tok_idx == len(tokens):
            yield x, y
            return
        token = tokens[tok_idx]
        if token in ("X", "Y"):
            for length in range(1, max_len + 1):
                if pos + length > len(lemmas):
                    break
                segment = lemmas[pos : pos + length]
                if any(l is None for l in segment):
                    break
                key = tuple(segment)
                if key in keys:
                    binding = (key if token == "X" else x, key if token == "Y" else y)
                    yield from walk(pos + length, tok_idx + 1, *binding)
        else:
            if pos < len(lemmas) and lemmas[pos] == token:
                yield from walk(pos + 1, tok_idx + 1, x, y)

    for start in range(len(lemmas)):
        yield from walk(start, 0, None, None)


def mine_isa(
    rows: Sequence[LemmaRow],
    candidates: Mapping[NormalForm, TermCandidate] | Iterable[NormalForm],
    patterns: Sequence[Pattern],
) -> list[RelationEvidence]:
    """Template matching over sentence lemma sequences. One evidence row per
    (subject, object, pattern); weight is the total match count and the
    location points at the first match."""
    keys = set(candidates)
    hits: dict[tuple[NormalForm, NormalForm, str], list] = {}
    for doc_id, sentence_id, lemmas in sorted(rows, key=lambda r: (r[0], r[1])):
        for pattern in patterns:
            for x, y in _match_pattern(lemmas, pattern.tokens, keys):
                if x == y:
                    continue
                slot = hits.setdefault((x, y, pattern.pattern_id), [0, doc_id, sentence_id])
                slot[0] += 1
    evidence = [
        RelationEvidence(x, "isA", y, pid, doc_id, sentence_id, float(count))
        for (x, y, pid), (count, doc_id, sentence_id) in hits.items()
    ]
    evidence.sort(key=lambda e: (e.subject_text, e.object_text, e.pattern_id))
    return evidence


def candidate_sentence_sets(
    chunks_by_doc: Mapping[int, Sequence[Chunk]], max_len: int = MAX_TERM_LEN
) -> dict[NormalForm, set[tuple[int, int]]]:
    """Candidate → set of (doc_id, sentence_id) pairs where it occurs."""
    occurrences: dict[NormalForm, set[tuple[int, int]]] = {}
    for doc_id in sorted(chunks_by_doc):
        for ch in chunks_by_doc[doc_id]:
            for _, key in _subsequences(ch.lemmas, max_len):
                occurrences.setdefault(key, set()).add((doc_id, ch.sentence_id))
    return occurrences


def mine_assoc(
    chunks_by_doc: Mapping[int, Sequence[Chunk]],
    sentence_count: int,
    tau: float,
    candidates: Mapping[NormalForm, TermCandidate] | Iterable[NormalForm] | None = None,
) -> list[RelationEvidence]:
    """PMI over sentence-level co-occurrence. One evidence row per unordered
    pair with PMI > tau; the subject is the lexicographically smaller
    normal form and the location the first co-occurring sentence."""
    if not math.isfinite(tau):
        raise ValueError("tau must be finite")
    if sentence_count < 1:
        return []
    occurrences = candidate_sentence_sets(chunks_by_doc)
    if candidates is not None:
        allowed = set(candidates)
        occurrences = {k: v for k, v in occurrences.items() if k in allowed}
    evidence: list[RelationEvidence] = []
    for x, y in itertools.combinations(sorted(occurrences, key=" ".join), 2):
        shared = occurrences[x] & occurrences[y]
        if not shared:
            continue
        pmi = math.log(
            (len(shared) / sentence_count)
            / (
                (len(occurrences[x]) / sentence_count)
                * (len(occurrences[y]) / sentence_count)
            )
        )
        if pmi > tau:
            doc_id, sentence_id = min(shared)
            evidence.append(
                RelationEvidence(x, "assoc", y, "pmi", doc_id, sentence_id, pmi)
            )
    evidence.sort(key=lambda e: (e.subject_text, e.object_text))
    return evidence


def flag_lexical_ambiguity(
    candidate: TermCandidate | NormalForm, evidence: Sequence[RelationEvidence]
) -> AmbiguityQuery | None:
    """Fires when the candidate's association neighbours split into at
    least two connected components of size ≥ 2 (in the association graph
    restricted to those neighbours). The query carries the two largest
    components."""
    key = candidate.normal_form if isinstance(candidate, TermCandidate) else candidate
    neighbours: set[NormalForm] = set()
    adjacency: dict[NormalForm, set[NormalForm]] = {}
    for e in evidence:
        if e.predicate != "assoc":
            continue
        adjacency.setdefault(e.subject, set()).add(e.object)
        adjacency.setdefault(e.object, set()).add(e.subject)
        if e.subject == key:
            neighbours.add(e.object)
        elif e.object == key:
            neighbours.add(e.subject)
    if len(neighbours) < 4:
        return None
    components: list[set[NormalForm]] = []
    todo = set(neighbours)
    while todo:
        start = todo.pop()
        component = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for nxt in adjacency.get(node, ()):
                if nxt in neighbours and nxt not in component:
                    component.add(nxt)
                    stack.append(nxt)
        todo -= component
        components.append(component)
    big = [c for c in components if len(c) >= 2]
    if len(big) < 2:
        return None
    big.sort(key=lambda c: (-len(c), min(" ".join(k) for k in c)))
    to_texts = lambda comp: tuple(sorted(" ".join(k) for k in comp))
    return AmbiguityQuery(key, to_texts(big[0]), to_texts(big[1]))


def flag_all_ambiguities(
    candidates: Mapping[NormalForm, TermCandidate],
    evidence: Sequence[RelationEvidence],
) -> list[AmbiguityQuery]:
    queries = []
    for key in sorted(candidates, key=" ".join):
        query = flag_lexical_ambiguity(candidates[key], evidence)
        if query is not None:
            queries.append(query)
    return queries
