import random

import pytest

from ontoforge.ontology import (
    ChecksumMismatch,
    Concept,
    CycleError,
    DuplicateConcept,
    DuplicateRelation,
    InvalidOntology,
    MalformedId,
    NotFound,
    Ontology,
    OntologyLibrary,
    ParseError,
    Relation,
    UnknownEndpoint,
    UnknownPredicate,
    export_triples,
    import_triples,
    is_slug,
)

from oracles import brute_has_cycle


def simple_ontology() -> Ontology:
    o = Ontology("demo", kind="object")
    for cid in ("a", "b", "c"):
        o.add_concept(Concept(cid, f"label {cid}"))
    return o


class TestConcepts:
    def test_insert_into_empty(self):
        o = Ontology("demo")
        o.add_concept(Concept("x", "x label"))
        assert len(o.concepts) == 1

    def test_duplicate_id_rejected(self):
        o = Ontology("demo")
        o.add_concept(Concept("x", "x"))
        with pytest.raises(DuplicateConcept):
            o.add_concept(Concept("x", "other"))

    def test_display_form_is_not_an_id(self):
        o = Ontology("demo")
        with pytest.raises(MalformedId):
            o.add_concept(Concept("Smart-система", "Smart-система"))

    def test_slug_accepts_cyrillic_lowercase(self):
        assert is_slug("кибер_физическая_система")
        assert is_slug("smart_атрибут")
        assert not is_slug("Smart")
        assert not is_slug("a-b")
        assert not is_slug("")

    def test_label_never_doubles_as_synonym(self):
        c = Concept("x", "метка", {"метка", "синоним"})
        assert c.synonyms == {"синоним"}


class TestRelations:
    def test_two_node_cycle_rejected(self):
        o = simple_ontology()
        o.add_relation(Relation("a", "isA", "b"))
        with pytest.raises(CycleError):
            o.add_relation(Relation("b", "isA", "a"))

    def test_self_association_permitted_only_for_assoc(self):
        o = simple_ontology()
        o.add_relation(Relation("a", "assoc", "a"))
        for predicate in ("isA", "partOf", "decomposesTo", "synonymOf"):
            with pytest.raises(CycleError):
                o.add_relation(Relation("b", predicate, "b"))

    def test_three_node_cycle_rejected(self):
        # independent check: the DFS oracle agrees the closing edge is cyclic
        o = simple_ontology()
        o.add_relation(Relation("a", "isA", "b"))
        o.add_relation(Relation("b", "isA", "c"))
        assert brute_has_cycle([("a", "b"), ("b", "c"), ("c", "a")])
        with pytest.raises(CycleError):
            o.add_relation(Relation("c", "isA", "a"))

    def test_unknown_endpoint(self):
        o = simple_ontology()
        with pytest.raises(UnknownEndpoint):
            o.add_relation(Relation("a", "isA", "ghost"))

    def test_duplicate_relation_rejected(self):
        o = simple_ontology()
        o.add_relation(Relation("a", "assoc", "b"))
        with pytest.raises(DuplicateRelation):
            o.add_relation(Relation("a", "assoc", "b"))

    def test_rejected_insert_leaves_ontology_unchanged(self):
        o = simple_ontology()
        o.add_relation(Relation("a", "isA", "b"))
        before = export_triples(o)
        with pytest.raises(CycleError):
            o.add_relation(Relation("b", "isA", "a"))
        assert export_triples(o) == before


class TestValidate:
    def test_fresh_ontology_validates_clean(self):
        o = simple_ontology()
        o.add_relation(Relation("a", "isA", "b"))
        assert o.validate() == []

    def test_dangling_endpoint_reported(self):
        text = (
            '@prefix ont: <urn:icon:onto#> .\n'
            'ont:demo ont:kind "object" .\n'
            'ont:a ont:label "a" .\n'
            "ont:a ont:isA ont:ghost .\n"
        )
        o = import_triples(text)
        violations = o.validate()
        assert len(violations) == 1
        assert violations[0].kind == "UnknownEndpoint"

    def test_seed_ontology_validates_clean(self, data_dir):
        o = import_triples((data_dir / "smart_system.ttl").read_text(encoding="utf-8"))
        assert len(o.concepts) >= 20
        assert o.validate() == []

    def test_empty_label_reported(self):
        text = (
            '@prefix ont: <urn:icon:onto#> .\n'
            'ont:demo ont:kind "object" .\n'
            'ont:a ont:syn "x" .\n'
        )
        violations = import_triples(text).validate()
        assert [v.kind for v in violations] == ["EmptyLabel"]


class TestSerialization:
    def test_empty_ontology_exports_header_only(self):
        text = export_triples(Ontology("demo", kind="object"))
        assert text == (
            '@prefix ont: <urn:icon:onto#> .\nont:demo ont:kind "object" .\n'
        )

    def test_single_concept(self):
        o = Ontology("demo", kind="object")
        o.add_concept(Concept("x", "икс"))
        assert text_lines(export_triples(o)) == [
            "@prefix ont: <urn:icon:onto#> .",
            'ont:demo ont:kind "object" .',
            'ont:x ont:label "икс" .',
        ]

    def test_export_independent_of_insertion_order(self):
        left = Ontology("demo")
        right = Ontology("demo")
        for cid in ("b", "a", "c"):
            left.add_concept(Concept(cid, cid, {f"syn2 {cid}", f"syn1 {cid}"}))
        for cid in ("c", "a", "b"):
            right.add_concept(Concept(cid, cid, {f"syn1 {cid}", f"syn2 {cid}"}))
        left.add_relation(Relation("a", "assoc", "b"))
        left.add_relation(Relation("a", "isA", "b"))
        right.add_relation(Relation("a", "isA", "b"))
        right.add_relation(Relation("a", "assoc", "b"))
        assert export_triples(left) == export_triples(right)

    def test_seed_export_is_stable(self, data_dir):
        raw = (data_dir / "smart_system.ttl").read_text(encoding="utf-8")
        o = import_triples(raw)
        assert export_triples(o) == export_triples(import_triples(export_triples(o)))
        assert export_triples(o) == raw  # the bundled file is canonical

    def test_escaping_round_trip(self):
        o = Ontology("demo")
        o.add_concept(Concept("x", 'quote " and \\ backslash', {'syn "q"'}))
        first = export_triples(o)
        assert export_triples(import_triples(first)) == first

    def test_line_break_in_label_rejected(self):
        o = Ontology("demo")
        o.add_concept(Concept("x", "two\nlines"))
        with pytest.raises(InvalidOntology):
            export_triples(o)

    def test_invalid_ontology_refuses_to_export(self):
        o = simple_ontology()
        o.relations.append(Relation("a", "isA", "ghost"))  # bypass checks
        with pytest.raises(InvalidOntology):
            export_triples(o)


class TestImport:
    def test_unknown_predicate_with_line_number(self):
        text = (
            '@prefix ont: <urn:icon:onto#> .\n'
            'ont:demo ont:kind "object" .\n'
            'ont:a ont:label "a" .\n'
            "ont:a ont:foo ont:b .\n"
        )
        with pytest.raises(UnknownPredicate) as err:
            import_triples(text)
        assert err.value.line_no == 4

    def test_unterminated_string_literal(self):
        text = (
            '@prefix ont: <urn:icon:onto#> .\n'
            'ont:demo ont:kind "object" .\n'
            'ont:a ont:label "oops .\n'
        )
        with pytest.raises(ParseError) as err:
            import_triples(text)
        assert err.value.line_no == 3

    def test_missing_prefix_line(self):
        with pytest.raises(ParseError) as err:
            import_triples('ont:demo ont:kind "object" .\n')
        assert err.value.line_no == 1

    def test_bad_escape(self):
        text = (
            '@prefix ont: <urn:icon:onto#> .\n'
            'ont:demo ont:kind "object" .\n'
            'ont:a ont:label "bad \\n escape" .\n'
        )
        with pytest.raises(ParseError) as err:
            import_triples(text)
        assert err.value.line_no == 3

    def test_unknown_kind(self):
        with pytest.raises(ParseError):
            import_triples('@prefix ont: <urn:icon:onto#> .\nont:demo ont:kind "weird" .\n')

    def test_relation_order_preserved(self):
        text = (
            '@prefix ont: <urn:icon:onto#> .\n'
            'ont:demo ont:kind "task" .\n'
            'ont:a ont:label "a" .\n'
            'ont:b ont:label "b" .\n'
            'ont:c ont:label "c" .\n'
            "ont:a ont:decomposesTo ont:c .\n"
            "ont:a ont:decomposesTo ont:b .\n"
        )
        o = import_triples(text)
        assert [(r.subject, r.object) for r in o.relations] == [("a", "c"), ("a", "b")]
        assert o.mutability == "dynamic"  # task ontologies hold per-project knowledge


class TestLibrary:
    def test_versions_are_dense_and_latest_wins(self, tmp_path):
        library = OntologyLibrary(tmp_path)
        o = simple_ontology()
        assert library.store(o) == ("demo", 1)
        o.add_relation(Relation("a", "isA", "b"))
        assert library.store(o) == ("demo", 2)
        assert library.versions("demo") == [1, 2]
        loaded = library.load("demo")
        assert loaded.version == 2
        assert len(loaded.relations) == 1

    def test_stored_files_reexport_identically(self, tmp_path):
        library = OntologyLibrary(tmp_path)
        o = simple_ontology()
        library.store(o)
        assert export_triples(library.load("demo", 1)) == export_triples(o)

    def test_tampered_file_detected(self, tmp_path):
        library = OntologyLibrary(tmp_path)
        library.store(simple_ontology())
        target = tmp_path / "demo" / "v1.ttl"
        target.write_text(target.read_text(encoding="utf-8") + "# x\n", encoding="utf-8")
        with pytest.raises(ChecksumMismatch):
            library.load("demo", 1)

    def test_not_found(self, tmp_path):
        library = OntologyLibrary(tmp_path)
        with pytest.raises(NotFound):
            library.load("ghost")
        library.store(simple_ontology())
        with pytest.raises(NotFound):
            library.load("demo", 7)


def text_lines(text: str) -> list[str]:
    return text.rstrip("\n").split("\n")


def test_random_insertions_keep_subgraphs_acyclic():
    rng = random.Random(17)
    o = Ontology("rand")
    ids = [f"n{i}" for i in range(12)]
    for cid in ids:
        o.add_concept(Concept(cid, cid))
    accepted = 0
    for _ in range(600):
        relation = Relation(
            rng.choice(ids),
            rng.choice(("isA", "decomposesTo", "partOf", "assoc")),
            rng.choice(ids),
        )
        before = export_triples(o)
        try:
            o.add_relation(relation)
            accepted += 1
        except (CycleError, DuplicateRelation, UnknownEndpoint):
            assert export_triples(o) == before
        for predicate in ("isA", "decomposesTo"):
            edges = [
                (r.subject, r.object) for r in o.relations if r.predicate == predicate
            ]
            assert not brute_has_cycle(edges)
    assert accepted > 0
