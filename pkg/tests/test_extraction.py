import math

import pytest

from ontoforge.corpus import CorpusIndex, DocumentRecord, build_index
from ontoforge.extraction import (
    MalformedPattern,
    TermCandidate,
    apply_scores,
    candidate_sentence_sets,
    flag_all_ambiguities,
    flag_lexical_ambiguity,
    harvest,
    load_patterns,
    mine_assoc,
    mine_isa,
    parse_patterns,
    score_cvalue,
    score_tfidf,
)
from ontoforge.linguistic import Chunk, analyze

from oracles import brute_cvalue, brute_harvest, brute_pmi, brute_tfidf

TOL = 1e-9


def make_chunk(lemmas, sentence_id=0):
    return Chunk(sentence_id, 0, len(lemmas), lemmas[0], tuple(lemmas), tuple(lemmas))


@pytest.fixture(scope="module")
def toy_analyses(lexicon, data_dir):
    analyses = {}
    for i in range(1, 6):
        body = (data_dir / "toy_corpus" / f"doc{i}.txt").read_text(encoding="utf-8")
        analyses[i] = analyze(body, lexicon, doc_id=i)
    return analyses


@pytest.fixture(scope="module")
def toy_chunks(toy_analyses):
    return {i: a.chunks for i, a in toy_analyses.items()}


@pytest.fixture(scope="module")
def toy_candidates(toy_chunks):
    return harvest(toy_chunks)


class TestHarvest:
    def test_empty_corpus(self):
        assert harvest({}) == {}

    def test_single_two_token_chunk(self):
        candidates = harvest({1: [make_chunk(("а", "б"))]})
        assert set(candidates) == {("а",), ("б",), ("а", "б")}
        assert all(c.freq == 1 for c in candidates.values())

    def test_nested_occurrences_counted(self):
        candidates = harvest({1: [make_chunk(("а", "а"))]})
        assert candidates[("а",)].freq == 2
        assert candidates[("а", "а")].freq == 1

    def test_toy_corpus_equals_brute_force(self, toy_chunks, toy_candidates):
        plain = {
            doc_id: [c.lemmas for c in chunk_list]
            for doc_id, chunk_list in toy_chunks.items()
        }
        expected = brute_harvest(plain)
        assert set(toy_candidates) == set(expected)
        for key, slot in expected.items():
            assert toy_candidates[key].freq == slot["freq"]
            assert toy_candidates[key].provenance == slot["docs"]
            assert toy_candidates[key].doc_freq == len(slot["docs"])

    def test_nesting_consistency(self, toy_candidates):
        from oracles import contains

        for a, cand_a in toy_candidates.items():
            for b, cand_b in toy_candidates.items():
                if contains(b, a):
                    assert cand_a.freq >= cand_b.freq

    def test_surface_variants_tracked(self, toy_candidates):
        assert "обработка текстов" in toy_candidates[("обработка", "текст")].surface_variants


class TestTfidf:
    def test_zero_iff_df_equals_doc_count(self):
        index = CorpusIndex(4, {}, {})
        everywhere = TermCandidate(("x",), freq=9, doc_freq=4)
        assert score_tfidf(everywhere, index) == 0.0
        rare = TermCandidate(("x",), freq=9, doc_freq=3)
        assert score_tfidf(rare, index) > 0.0

    def test_direct_formula(self):
        index = CorpusIndex(4, {}, {})
        candidate = TermCandidate(("x",), freq=3, doc_freq=2)
        assert score_tfidf(candidate, index) == pytest.approx(3 * math.log(2), abs=TOL)

    def test_toy_scores_match_oracle(self, lexicon, data_dir, toy_candidates):
        docs = [
            DocumentRecord(i, f"d{i}", f"d{i}",
                           (data_dir / "toy_corpus" / f"doc{i}.txt").read_text("utf-8"), "t")
            for i in range(1, 6)
        ]
        index = build_index(docs, lexicon)
        for key, candidate in toy_candidates.items():
            expected = brute_tfidf(candidate.freq, index.doc_count, candidate.doc_freq)
            assert score_tfidf(candidate, index) == pytest.approx(expected, abs=TOL)


class TestCvalue:
    def test_unigram_weight_is_one(self):
        candidates = {("а",): TermCandidate(("а",), freq=5, doc_freq=1)}
        assert score_cvalue(candidates)[("а",)] == pytest.approx(5.0, abs=TOL)

    def test_bundled_discount_example(self, toy_candidates):
        # 4 occurrences, one container seen once → log2(3)·(4 − 1)
        scores = score_cvalue(toy_candidates)
        assert scores[("обработка", "текст")] == pytest.approx(
            math.log2(3) * 3, abs=TOL
        )
        assert scores[("обработка", "текст")] == pytest.approx(4.7548875, abs=1e-6)

    def test_zero_when_frequency_equals_mean_container_frequency(self):
        candidates = {
            ("а", "б"): TermCandidate(("а", "б"), freq=2, doc_freq=1),
            ("х", "а", "б"): TermCandidate(("х", "а", "б"), freq=2, doc_freq=1),
        }
        assert score_cvalue(candidates)[("а", "б")] == pytest.approx(0.0, abs=TOL)

    def test_never_nested_candidate(self, toy_candidates):
        scores = score_cvalue(toy_candidates)
        key = ("автоматический", "обработка", "текст")
        expected = math.log2(4) * toy_candidates[key].freq
        assert scores[key] == pytest.approx(expected, abs=TOL)

    def test_toy_scores_match_oracle(self, toy_candidates):
        freqs = {key: c.freq for key, c in toy_candidates.items()}
        expected = brute_cvalue(freqs)
        actual = score_cvalue(toy_candidates)
        assert set(actual) == set(expected)
        for key in expected:
            assert actual[key] == pytest.approx(expected[key], abs=TOL)


class TestPatterns:
    def test_fixture_sentence_matches(self, toy_candidates):
        rows = [(2, 1, ("процессор", "являться", "устройство"))]
        patterns = parse_patterns("X являться Y\n")
        evidence = mine_isa(rows, toy_candidates, patterns)
        assert len(evidence) == 1
        assert evidence[0].subject == ("процессор",)
        assert evidence[0].object == ("устройство",)
        assert evidence[0].predicate == "isA"
        assert evidence[0].weight == 1.0
        assert (evidence[0].doc_id, evidence[0].sentence_id) == (2, 1)

    def test_no_match_is_empty(self, toy_candidates):
        rows = [(1, 0, ("онтология", "расти"))]
        patterns = parse_patterns("X являться Y\n")
        assert mine_isa(rows, toy_candidates, patterns) == []

    def test_template_missing_slot_rejected(self):
        with pytest.raises(MalformedPattern):
            parse_patterns("X являться\n")
        with pytest.raises(MalformedPattern):
            parse_patterns("являться Y\n")

    def test_bundled_patterns_load(self, data_dir):
        patterns = load_patterns(data_dir / "patterns.txt")
        assert len(patterns) == 3

    def test_weight_counts_matches(self, toy_candidates):
        rows = [
            (1, 0, ("процессор", "являться", "устройство")),
            (1, 1, ("процессор", "являться", "устройство")),
        ]
        patterns = parse_patterns("X являться Y\n")
        evidence = mine_isa(rows, toy_candidates, patterns)
        assert evidence[0].weight == 2.0
        assert evidence[0].sentence_id == 0  # first match location

    def test_multiword_slot_binding(self, toy_candidates):
        rows = [(1, 0, ("обработка", "текст", "являться", "процесс"))]
        patterns = parse_patterns("X являться Y\n")
        evidence = mine_isa(rows, toy_candidates, patterns)
        pairs = {(e.subject, e.object) for e in evidence}
        # both the unigram and the bigram readings of the left slot bind
        assert (("обработка", "текст"), ("процесс",)) in pairs
        assert (("текст",), ("процесс",)) in pairs


class TestAssoc:
    def test_ubiquitous_pair_has_zero_pmi(self):
        chunks = {
            1: [make_chunk(("а",), 0), make_chunk(("б",), 0),
                make_chunk(("а",), 1), make_chunk(("б",), 1)],
        }
        evidence = mine_assoc(chunks, 2, tau=-1.0)
        pair = [e for e in evidence if e.subject == ("а",) and e.object == ("б",)]
        assert pair[0].weight == pytest.approx(0.0, abs=TOL)

    def test_single_co_occurrence_in_four_sentences(self):
        chunks = {
            1: [make_chunk(("а",), 0), make_chunk(("б",), 0)],
            2: [make_chunk(("в",), 0), make_chunk(("г",), 1)],
        }
        # sentences: (1,0), (2,0), (2,1) plus one empty → pass count explicitly
        evidence = mine_assoc(chunks, 4, tau=0.5)
        pair = [e for e in evidence if e.subject == ("а",)]
        assert pair[0].object == ("б",)
        assert pair[0].weight == pytest.approx(math.log(4), abs=TOL)

    def test_subject_precedes_object_lexicographically(self, toy_chunks, toy_candidates):
        for e in mine_assoc(toy_chunks, 15, tau=0.5, candidates=toy_candidates):
            assert e.subject_text < e.object_text

    def test_toy_assoc_matches_oracle(self, toy_chunks, toy_candidates):
        occurrences = {
            " ".join(k): v for k, v in candidate_sentence_sets(toy_chunks).items()
        }
        expected = brute_pmi(occurrences, 15)
        for tau in (0.5, -100.0):
            actual = {
                (e.subject_text, e.object_text): e.weight
                for e in mine_assoc(toy_chunks, 15, tau=tau, candidates=toy_candidates)
            }
            filtered = {p: v for p, v in expected.items() if v > tau}
            assert set(actual) == set(filtered)
            for pair, value in filtered.items():
                assert actual[pair] == pytest.approx(value, abs=TOL)


class TestAmbiguity:
    def test_single_neighbour_never_fires(self):
        chunks = {1: [make_chunk(("а",), 0), make_chunk(("б",), 0)]}
        candidates = harvest(chunks)
        evidence = mine_assoc(chunks, 2, tau=-10)
        assert flag_lexical_ambiguity(("а",), evidence) is None

    def test_two_disjoint_pairs_fire(self):
        # neighbours {a,b} and {c,d} of x are internally linked, mutually not
        chunks = {
            1: [make_chunk(("х",), 0), make_chunk(("а",), 0), make_chunk(("б",), 0)],
            2: [make_chunk(("х",), 0), make_chunk(("в",), 0), make_chunk(("г",), 0)],
        }
        evidence = mine_assoc(chunks, 10, tau=0.5)
        query = flag_lexical_ambiguity(("х",), evidence)
        assert query is not None
        assert query.group_a == ("а", "б")
        assert query.group_b == ("в", "г")

    def test_polysemy_fixture_exactly_one_query(self, lexicon, data_dir):
        analyses = {}
        count = 0
        for i, name in enumerate(("doc1.txt", "doc2.txt"), start=1):
            body = (data_dir / "polysemy" / name).read_text(encoding="utf-8")
            analyses[i] = analyze(body, lexicon, doc_id=i)
            count += len(analyses[i].sentences)
        chunks = {i: a.chunks for i, a in analyses.items()}
        candidates = harvest(chunks)
        evidence = mine_assoc(chunks, count, tau=0.5, candidates=candidates)
        queries = flag_all_ambiguities(candidates, evidence)
        assert [q.text for q in queries] == ["ядро"]
        assert queries[0].group_a == ("команда", "процессор")
        assert queries[0].group_b == ("масло", "орех")


def test_apply_scores_uses_bindings(toy_candidates, lexicon, data_dir):
    docs = [
        DocumentRecord(i, f"d{i}", f"d{i}",
                       (data_dir / "toy_corpus" / f"doc{i}.txt").read_text("utf-8"), "t")
        for i in range(1, 6)
    ]
    index = build_index(docs, lexicon)
    candidates = harvest({1: [make_chunk(("а", "б"))]})
    apply_scores(candidates, CorpusIndex(1, {}, {}), tfidf=True, cvalue=False)
    assert all(c.cvalue == 0.0 for c in candidates.values())
    apply_scores(toy_candidates, index)
    assert toy_candidates[("обработка", "текст")].tfidf == pytest.approx(
        4 * math.log(5 / 3), abs=TOL
    )
