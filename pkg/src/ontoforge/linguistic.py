"""Text segmentation, lexicon-driven morphological annotation, grammatical
homonymy resolution and noun-phrase chunking.

Analysis is lookup-only: every analysis comes from the lexicon, an ordered
TSV dictionary where line order within a surface form encodes frequency
rank. Tokens the lexicon does not know fall back to (lowercased surface,
OTHER). The disambiguation cascade is deterministic; a token stays
ambiguous (and raises an engineer query) only when its lexicon entry is
flagged ``no-default``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import OntoForgeError

POS_TAGS = frozenset(
    {"NOUN", "ADJ", "VERB", "ADV", "PREP", "CONJ", "NUM", "PRON", "OTHER"}
)

RESOLVED = "resolved"
AMBIGUOUS = "ambiguous"
UNKNOWN = "unknown"


class LexiconError(OntoForgeError):
    pass


@dataclass(frozen=True)
class Analysis:
    lemma: str
    pos: str


class Lexicon:
    """Surface form → ordered analyses, plus (left-pos, pos) bigram
    preferences used by the disambiguation cascade.

    File format: one analysis per line, ``surface<TAB>lemma<TAB>pos`` with
    an optional fourth column of flags (``no-default`` suppresses the
    pick-first fallback for that surface). Lines starting with ``#`` are
    comments; ``!bigram<TAB>LEFT<TAB>RIGHT`` lines declare preference pairs.
    """

    def __init__(
        self,
        entries: dict[str, list[Analysis]] | None = None,
        bigram_prefs: list[tuple[str, str]] | None = None,
        no_default: set[str] | None = None,
    ):
        self.entries = entries or {}
        self.bigram_prefs = list(bigram_prefs or [])
        self.no_default = set(no_default or ())
        for surface, analyses in self.entries.items():
            if not analyses:
                raise LexiconError(f"entry {surface!r} has no analyses")
            for analysis in analyses:
                if analysis.pos not in POS_TAGS:
                    raise LexiconError(
                        f"entry {surface!r}: unknown pos {analysis.pos!r}"
                    )
        self._pref_set = set(self.bigram_prefs)

    @classmethod
    def load(cls, path: Path | str) -> "Lexicon":
        entries: dict[str, list[Analysis]] = {}
        bigrams: list[tuple[str, str]] = []
        no_default: set[str] = set()
        text = Path(path).read_text(encoding="utf-8")
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            columns = line.split("\t")
            if columns[0] == "!bigram":
                if len(columns) != 3:
                    raise LexiconError(f"line {line_no}: bad !bigram directive")
                left, right = columns[1], columns[2]
                if left not in POS_TAGS or right not in POS_TAGS:
                    raise LexiconError(f"line {line_no}: unknown pos in !bigram")
                bigrams.append((left, right))
                continue
            if len(columns) not in (3, 4):
                raise LexiconError(f"line {line_no}: expected 3 or 4 columns")
            surface, lemma, pos = columns[0], columns[1], columns[2]
            if pos not in POS_TAGS:
                raise LexiconError(f"line {line_no}: unknown pos {pos!r}")
            flags = columns[3].replace(",", " ").split() if len(columns) == 4 else []
            key = surface.casefold()
            analysis = Analysis(lemma, pos)
            bucket = entries.setdefault(key, [])
            if analysis not in bucket:
                bucket.append(analysis)
            if "no-default" in flags:
                no_default.add(key)
        return cls(entries, bigrams, no_default)

    def lookup(self, surface: str) -> tuple[Analysis, ...]:
        return tuple(self.entries.get(surface.casefold(), ()))

    def is_no_default(self, surface: str) -> bool:
        return surface.casefold() in self.no_default

    def prefers(self, left_pos: str, pos: str) -> bool:
        return (left_pos, pos) in self._pref_set


@dataclass(frozen=True)
class TokenAnnotation:
    surface: str
    offset: int  # byte offset of the token in the UTF-8 source
    candidates: tuple[Analysis, ...]
    resolved: Analysis | None
    status: str


@dataclass(frozen=True)
class Chunk:
    sentence_id: int
    start: int
    end: int  # token span [start, end)
    head_lemma: str
    lemmas: tuple[str, ...]
    surfaces: tuple[str, ...]


@dataclass(frozen=True)
class HomonymyQuery:
    doc_id: int
    sentence_id: int
    offset: int
    surface: str
    candidates: tuple[Analysis, ...]


def _is_token_char(ch: str) -> bool:
    return ch.isalnum() or ch == "-"


def segment_with_offsets(text: str) -> list[list[tuple[str, int]]]:
    """Split into sentences of (surface, byte offset) tokens.

    Sentence boundary: '.', '!' or '?' followed by whitespace and an
    uppercase letter, or by end of text. Tokens are maximal runs of
    letters/digits/hyphens; everything else is dropped.
    """
    sentences: list[list[tuple[str, int]]] = []
    current: list[tuple[str, int]] = []
    token_chars: list[str] = []
    token_start = 0
    byte_pos = 0
    n = len(text)

    def flush_token():
        nonlocal token_chars
        if token_chars:
            current.append(("".join(token_chars), token_start))
            token_chars = []

    def flush_sentence():
        nonlocal current
        flush_token()
        if current:
            sentences.append(current)
            current = []

    for i, ch in enumerate(text):
        if _is_token_char(ch):
            if not token_chars:
                token_start = byte_pos
            token_chars.append(ch)
        else:
            flush_token()
            if ch in ".!?":
                j = i + 1
                saw_ws = False
                while j < n and text[j].isspace():
                    saw_ws = True
                    j += 1
                if j >= n or (saw_ws and text[j].isupper()):
                    flush_sentence()
        byte_pos += len(ch.encode("utf-8"))
    flush_sentence()
    return sentences


def segment(text: str) -> list[list[str]]:
    """Sentence/token split without offsets."""
    return [[surface for surface, _ in sent] for sent in segment_with_offsets(text)]


def annotate(surface: str, lexicon: Lexicon, offset: int = 0) -> TokenAnnotation:
    """Look the case-folded surface up in the lexicon. A single analysis
    resolves immediately; several stay ambiguous for the cascade; none at
    all falls back to (lowercased surface, OTHER)."""
    candidates = lexicon.lookup(surface)
    if not candidates:
        # unknown tokens keep an empty candidate set; the fallback analysis
        # lives only in `resolved`
        fallback = Analysis(surface.casefold(), "OTHER")
        return TokenAnnotation(surface, offset, (), fallback, UNKNOWN)
    if len(candidates) == 1:
        return TokenAnnotation(surface, offset, candidates, candidates[0], RESOLVED)
    return TokenAnnotation(surface, offset, candidates, None, AMBIGUOUS)


def disambiguate(
    sentence: list[TokenAnnotation],
    lexicon: Lexicon,
    *,
    doc_id: int = 0,
    sentence_id: int = 0,
    use_bigrams: bool = True,
) -> tuple[list[TokenAnnotation], list[HomonymyQuery]]:
    """Run the rule cascade over one sentence, left to right.

    Per ambiguous token: (a) a single candidate resolves outright; (b) if
    the left neighbour's resolved pos forms a preferred bigram with exactly
    one candidate, that candidate wins; (c) otherwise the first-listed
    candidate wins — unless the entry is flagged no-default, in which case
    the token stays ambiguous and a HomonymyQuery is emitted.
    """
    out: list[TokenAnnotation] = []
    queries: list[HomonymyQuery] = []
    for token in sentence:
        if token.status != AMBIGUOUS:
            out.append(token)
            continue
        chosen: Analysis | None = None
        if len(token.candidates) == 1:
            chosen = token.candidates[0]
        if chosen is None and use_bigrams and out:
            left = out[-1].resolved
            if left is not None:
                matching = [
                    c for c in token.candidates if lexicon.prefers(left.pos, c.pos)
                ]
                if len(matching) == 1:
                    chosen = matching[0]
        if chosen is None and not lexicon.is_no_default(token.surface):
            chosen = token.candidates[0]
        if chosen is not None:
            out.append(replace(token, resolved=chosen, status=RESOLVED))
        else:
            out.append(token)
            queries.append(
                HomonymyQuery(
                    doc_id, sentence_id, token.offset, token.surface, token.candidates
                )
            )
    return out, queries


def chunk(sentence: list[TokenAnnotation], sentence_id: int = 0) -> list[Chunk]:
    """Maximal ADJ* NOUN+ spans over resolved tokens. Unknown and ambiguous
    tokens never participate and act as chunk boundaries."""

    def pos_of(token: TokenAnnotation) -> str | None:
        if token.status == RESOLVED and token.resolved is not None:
            return token.resolved.pos
        return None

    chunks: list[Chunk] = []
    i = 0
    n = len(sentence)
    while i < n:
        j = i
        while j < n and pos_of(sentence[j]) == "ADJ":
            j += 1
        k = j
        while k < n and pos_of(sentence[k]) == "NOUN":
            k += 1
        if k > j:
            span = sentence[i:k]
            chunks.append(
                Chunk(
                    sentence_id,
                    i,
                    k,
                    head_lemma=sentence[j].resolved.lemma,
                    lemmas=tuple(t.resolved.lemma for t in span),
                    surfaces=tuple(t.surface for t in span),
                )
            )
            i = k
        else:
            i += 1
    return chunks


@dataclass
class DocAnalysis:
    """Full analysis of one document: annotated sentences, chunks and any
    unresolved homonymy queries."""

    doc_id: int
    sentences: list[list[TokenAnnotation]] = field(default_factory=list)
    chunks: list[Chunk] = field(default_factory=list)
    queries: list[HomonymyQuery] = field(default_factory=list)

    def sentence_lemma_rows(self) -> list[tuple[int, int, tuple[str | None, ...]]]:
        """(doc_id, sentence_id, lemmas) rows; unresolved tokens map to None."""
        rows = []
        for sid, sentence in enumerate(self.sentences):
            lemmas = tuple(
                t.resolved.lemma if t.resolved is not None else None for t in sentence
            )
            rows.append((self.doc_id, sid, lemmas))
        return rows

    def lemma_set(self) -> set[str]:
        out: set[str] = set()
        for sentence in self.sentences:
            for token in sentence:
                if token.resolved is not None:
                    out.add(token.resolved.lemma)
        return out


def analyze(
    text: str,
    lexicon: Lexicon,
    *,
    doc_id: int = 0,
    overrides: dict[tuple[int, int], Analysis] | None = None,
    use_bigrams: bool = True,
) -> DocAnalysis:
    """Segment, annotate, disambiguate and chunk a document.

    ``overrides`` maps (sentence_id, token byte offset) to an engineer-chosen
    analysis; an overridden token is forced resolved and emits no query.
    """
    overrides = overrides or {}
    result = DocAnalysis(doc_id)
    for sid, raw_sentence in enumerate(segment_with_offsets(text)):
        annotated = [annotate(surface, lexicon, offset) for surface, offset in raw_sentence]
        resolved, queries = disambiguate(
            annotated, lexicon, doc_id=doc_id, sentence_id=sid, use_bigrams=use_bigrams
        )
        patched: list[TokenAnnotation] = []
        for token in resolved:
            override = overrides.get((sid, token.offset))
            if override is not None:
                candidates = token.candidates
                if override not in candidates:
                    candidates = candidates + (override,)
                token = replace(
                    token, candidates=candidates, resolved=override, status=RESOLVED
                )
            patched.append(token)
        overridden_offsets = {
            offset for (qsid, offset) in overrides if qsid == sid
        }
        result.sentences.append(patched)
        result.queries.extend(
            q for q in queries if q.offset not in overridden_offsets
        )
        result.chunks.extend(chunk(patched, sentence_id=sid))
    return result
