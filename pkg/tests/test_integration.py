import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from ontoforge.integration import (
    AlignmentMatch,
    InsufficientInput,
    InvalidMatch,
    align,
    convergence_clusters,
    merge,
    merge_report_lines,
    normalize_label,
)
from ontoforge.ontology import Concept, Ontology, Relation

from oracles import brute_label_groups


def build(ontology_id, concepts, relations=(), kind="object"):
    o = Ontology(ontology_id, kind=kind)
    for cid, label, *rest in concepts:
        synonyms = set(rest[0]) if rest else set()
        o.add_concept(Concept(cid, label, synonyms))
    for s, p, obj in relations:
        o.add_relation(Relation(s, p, obj))
    return o


class TestNormalize:
    def test_case_trim_collapse(self):
        assert normalize_label("  Smart-Система ") == "smart-система"

    def test_yo_mapping(self):
        assert normalize_label("приём") == "прием"
        assert normalize_label("Ёлка") == "елка"

    def test_collapses_internal_runs(self):
        assert normalize_label("два   слова\tрядом") == "два слова рядом"

    @given(st.text(max_size=40))
    def test_idempotent(self, text):
        once = normalize_label(text)
        assert normalize_label(once) == once


class TestAlign:
    def test_equal_labels_score_one(self):
        a = build("a", [("c1", "онтология")])
        b = build("b", [("x9", "Онтология")])
        matches = align(a, b)
        assert len(matches) == 1
        assert matches[0].score == 1.0
        assert matches[0].basis == "label-equal"

    def test_disjoint_vocabularies(self):
        a = build("a", [("c1", "анализ")])
        b = build("b", [("c1", "синтез")])
        assert align(a, b) == []

    def test_synonym_overlap_scores_09(self):
        a = build("a", [("эвм", "ЭВМ", ["компьютер"])])
        b = build("b", [("комп", "Компьютер")])
        matches = align(a, b)
        assert len(matches) == 1
        assert matches[0].score == 0.9
        assert matches[0].basis == "synonym-overlap"

    def test_one_to_one_with_deterministic_tie_break(self):
        a = build("a", [("c1", "знание")])
        b = build("b", [("z2", "знание"), ("z1", "знание")])
        matches = align(a, b)
        assert len(matches) == 1
        assert matches[0].right == "z1"  # smallest counterpart id wins

    def test_score_one_iff_label_equal(self):
        a = build("a", [("c1", "знание", ["данные"]), ("c2", "метод")])
        b = build("b", [("d1", "данные"), ("d2", "метод")])
        for m in align(a, b):
            left = normalize_label(a.concepts[m.left].preferred_label)
            right = normalize_label(b.concepts[m.right].preferred_label)
            assert (m.score == 1.0) == (left == right)


class TestMerge:
    def test_self_merge_preserves_label_multiset(self):
        o = build(
            "demo",
            [("a", "альфа"), ("b", "бета", ["β"])],
            [("a", "isA", "b")],
        )
        merged = merge(o, o, align(o, o))
        labels = Counter(
            normalize_label(c.preferred_label) for c in merged.concepts.values()
        )
        assert labels == Counter(
            normalize_label(c.preferred_label) for c in o.concepts.values()
        )
        assert merged.validate() == []

    def test_disjoint_merge_keeps_all_concepts(self):
        a = build("a", [("x1", "один"), ("x2", "два"), ("x3", "три")])
        b = build("b", [("y1", "четыре"), ("y2", "пять")])
        merged = merge(a, b, align(a, b))
        assert len(merged.concepts) == 5

    def test_fused_pair_unions_sources_and_demotes_label(self):
        a = build("a", [("c1", "онтология")])
        b = build("b", [("d1", "Онтология")])
        a.concepts["c1"].sources = {1, 2}
        b.concepts["d1"].sources = {3}
        merged = merge(a, b, align(a, b))
        fused = merged.concepts["c1"]
        assert fused.sources == {1, 2, 3}
        assert "Онтология" in fused.synonyms  # differing right label survives as synonym

    def test_relations_remapped_and_deduplicated(self):
        a = build("a", [("c1", "один"), ("c2", "два")], [("c1", "isA", "c2")])
        b = build("b", [("d1", "один"), ("d2", "два")], [("d1", "isA", "d2")])
        merged = merge(a, b, align(a, b))
        assert len(merged.relations) == 1
        assert merged.validate() == []

    def test_id_collision_between_unmatched_concepts(self):
        a = build("a", [("same", "альфа")])
        b = build("b", [("same", "гамма")])
        merged = merge(a, b, align(a, b))
        assert set(merged.concepts) == {"same", "same_2"}
        assert merged.validate() == []

    def test_cycle_closing_relation_skipped(self):
        a = build("a", [("c1", "один"), ("c2", "два")], [("c1", "isA", "c2")])
        b = build("b", [("d1", "один"), ("d2", "два")], [("d2", "isA", "d1")])
        report = []
        merged = merge(a, b, align(a, b), report=report)
        assert merged.validate() == []
        assert any(entry["action"] == "skip_relation" for entry in report)

    def test_mixed_kind(self):
        a = build("a", [("c1", "один")], kind="object")
        b = build("b", [("d1", "два")], kind="process")
        assert merge(a, b, align(a, b)).kind == "mixed"

    def test_symmetry_on_label_and_relation_multisets(self):
        a = build(
            "a",
            [("a1", "знание"), ("a2", "метод", ["приём"]), ("a3", "система")],
            [("a1", "isA", "a3"), ("a2", "assoc", "a1")],
        )
        b = build(
            "b",
            [("b1", "знание"), ("b2", "прием"), ("b4", "модель")],
            [("b1", "isA", "b4")],
        )
        ab = merge(a, b, align(a, b))
        ba = merge(b, a, align(b, a))

        # canonical node key: the full normalized label set — for a
        # synonym-overlap fusion the direction decides which label stays
        # preferred, but the label set is direction-independent
        def key(o, cid):
            concept = o.concepts[cid]
            labels = {normalize_label(concept.preferred_label)}
            labels.update(normalize_label(s) for s in concept.synonyms)
            return frozenset(labels)

        def label_multiset(o):
            return Counter(key(o, cid) for cid in o.concepts)

        def relation_multiset(o):
            return Counter(
                (key(o, r.subject), r.predicate, key(o, r.object))
                for r in o.relations
            )

        assert label_multiset(ab) == label_multiset(ba)
        assert relation_multiset(ab) == relation_multiset(ba)

    def test_report_lines_are_json(self):
        a = build("a", [("c1", "один")])
        report = []
        merge(a, a, align(a, a), report=report)
        text = merge_report_lines(report)
        assert text.endswith("\n")
        assert '"fuse"' in text

    def test_match_with_absent_endpoint_rejected(self):
        a = build("a", [("c1", "один")])
        b = build("b", [("d1", "один")])
        bogus = [AlignmentMatch("a", "ghost", "b", "d1", 1.0, "label-equal")]
        with pytest.raises(InvalidMatch):
            merge(a, b, bogus)


class TestConvergence:
    def test_shared_label_clusters(self):
        ontologies = [
            build("o1", [("a", "знание")]),
            build("o2", [("b", "Знание")]),
            build("o3", [("c", "метод")]),
        ]
        clusters = convergence_clusters(ontologies, k=2)
        assert len(clusters) == 1
        assert clusters[0].label == "знание"
        assert clusters[0].support == 2

    def test_all_distinct_labels(self):
        ontologies = [build("o1", [("a", "один")]), build("o2", [("b", "два")])]
        assert convergence_clusters(ontologies, k=2) == []

    def test_insufficient_input(self):
        with pytest.raises(InsufficientInput):
            convergence_clusters([build("o1", [("a", "один")])], k=2)

    def test_sorted_by_support_then_label(self):
        ontologies = [
            build("o1", [("a", "знание"), ("b", "метод")]),
            build("o2", [("a", "знание"), ("b", "метод")]),
            build("o3", [("a", "знание")]),
        ]
        clusters = convergence_clusters(ontologies, k=2)
        assert [(c.label, c.support) for c in clusters] == [
            ("знание", 3),
            ("метод", 2),
        ]

    def test_matches_brute_force_grouping(self):
        rng = random.Random(11)
        pool = [f"термин{i}" for i in range(30)]
        ontologies = []
        for n in range(5):
            concepts = [
                (f"c{j}", rng.choice(pool)) for j in range(50)
            ]
            # concept ids must be unique per ontology; labels may repeat
            o = Ontology(f"o{n}")
            for cid, label in concepts:
                o.add_concept(Concept(cid, label))
            ontologies.append(o)
        clusters = convergence_clusters(ontologies, k=2)
        expected = brute_label_groups(
            [
                (o.ontology_id, {cid: normalize_label(c.preferred_label)
                                 for cid, c in o.concepts.items()})
                for o in ontologies
            ],
            k=2,
        )
        assert {c.label for c in clusters} == set(expected)
        for cluster in clusters:
            assert set(cluster.members) == expected[cluster.label]
