"""Attribute-pattern class matching."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import panoptica as p
from panoptica.errors import EmptyPerception
from panoptica.recognition import NAME_WEIGHT, VALUE_WEIGHT, Perception, classify, match_report
from panoptica.vocabulary import normalize_name


def library_vocab() -> p.Vocabulary:
    vocab = p.Vocabulary("library")
    vocab = p.create_class(vocab, "Author")
    vocab = p.add_attribute(vocab, "Author", p.AttributeDef("name", p.Kind.TEXT, required=True))
    vocab = p.add_attribute(vocab, "Author", p.AttributeDef("born", p.Kind.DATE))
    vocab = p.create_class(vocab, "Composition")
    vocab = p.add_attribute(vocab, "Composition", p.AttributeDef("title", p.Kind.TEXT, required=True))
    vocab = p.add_attribute(
        vocab, "Composition", p.AttributeDef("author", p.Kind.LINK, target_class="Author")
    )
    vocab = p.add_attribute(vocab, "Composition", p.AttributeDef("year", p.Kind.INTEGER))
    return vocab


class TestClassify:
    def test_exact_pattern_wins(self):
        # brute force: Composition names {title, author, year}; perceived
        # {title, author}: jaccard = 2/3. Author names {name, born}: 0/4.
        matches = classify(library_vocab(), Perception(frozenset({"title", "author"})))
        assert [m.class_name for m in matches] == ["Composition"]
        assert matches[0].score == NAME_WEIGHT * Fraction(2, 3) + VALUE_WEIGHT

    def test_identity_pattern_scores_one(self):
        matches = classify(library_vocab(), Perception(frozenset({"title", "author", "year"})))
        assert matches[0].class_name == "Composition"
        assert matches[0].score == 1

    def test_zero_score_classes_omitted(self):
        matches = classify(library_vocab(), Perception(frozenset({"unrelated"})))
        assert matches == []

    def test_normalization_bridges_case_and_spaces(self):
        matches = classify(library_vocab(), Perception(frozenset({" Title ", "AUTHOR"})))
        assert matches[0].class_name == "Composition"
        assert matches[0].matched == frozenset({"title", "author"})

    def test_bad_link_sample_lowers_score(self):
        full = classify(library_vocab(), Perception(frozenset({"title", "author"})))
        penalized = classify(
            library_vocab(),
            Perception(frozenset({"title", "author"}), {"author": ("not-an-id",)}),
        )
        assert penalized[0].class_name == "Composition"
        assert penalized[0].value_compat == Fraction(1, 2)
        assert penalized[0].score < full[0].score

    def test_integer_sample_compatible_with_link(self):
        matches = classify(
            library_vocab(), Perception(frozenset({"title", "author"}), {"author": ("42",)})
        )
        assert matches[0].value_compat == 1

    def test_label_sample_compatible_with_store(self):
        vocab = library_vocab()
        store = p.Store(vocab)
        store.insert("Author", {"name": "Giacomo Puccini"})
        without_store = classify(
            vocab, Perception(frozenset({"title", "author"}), {"author": ("Giacomo Puccini",)})
        )
        with_store = classify(
            vocab,
            Perception(frozenset({"title", "author"}), {"author": ("Giacomo Puccini",)}),
            store,
        )
        assert without_store[0].value_compat == Fraction(1, 2)
        assert with_store[0].value_compat == 1

    def test_scalar_samples_checked_against_kind(self):
        matches = classify(
            library_vocab(),
            Perception(frozenset({"title", "year"}), {"year": ("1871", "1893")}),
        )
        assert matches[0].value_compat == 1
        matches = classify(
            library_vocab(),
            Perception(frozenset({"title", "year"}), {"year": ("about 1871",)}),
        )
        assert matches[0].value_compat == Fraction(1, 2)

    def test_missing_required_reported(self):
        matches = classify(library_vocab(), Perception(frozenset({"year"})))
        assert matches[0].class_name == "Composition"
        assert matches[0].missing_required == frozenset({"title"})

    def test_empty_perception_rejected(self):
        with pytest.raises(EmptyPerception):
            Perception(frozenset())
        with pytest.raises(EmptyPerception):
            Perception(frozenset({"title"}), {"title": ()})

    def test_tie_breaks_on_missing_required_then_declaration(self):
        vocab = p.Vocabulary("ties")
        vocab = p.create_class(vocab, "First")
        vocab = p.add_attribute(vocab, "First", p.AttributeDef("name", p.Kind.TEXT, required=True))
        vocab = p.add_attribute(vocab, "First", p.AttributeDef("extra", p.Kind.TEXT, required=True))
        vocab = p.create_class(vocab, "Second")
        vocab = p.add_attribute(vocab, "Second", p.AttributeDef("name", p.Kind.TEXT, required=True))
        vocab = p.add_attribute(vocab, "Second", p.AttributeDef("extra", p.Kind.TEXT))
        matches = classify(vocab, Perception(frozenset({"name"})))
        assert [m.class_name for m in matches] == ["Second", "First"]
        assert matches[0].score == matches[1].score

        vocab_same = p.create_class(vocab, "Third")
        vocab_same = p.add_attribute(vocab_same, "Third", p.AttributeDef("name", p.Kind.TEXT, required=True))
        vocab_same = p.add_attribute(vocab_same, "Third", p.AttributeDef("extra", p.Kind.TEXT))
        matches = classify(vocab_same, Perception(frozenset({"name"})))
        assert [m.class_name for m in matches] == ["Second", "Third", "First"]


class TestMatchReport:
    def test_full_match_line(self):
        matches = classify(library_vocab(), Perception(frozenset({"name", "born"})))
        assert match_report(matches[0]) == "Author score=1.000 matched=[born,name] missing_required=[]"

    def test_partial_match_lists_missing_sorted(self):
        matches = classify(library_vocab(), Perception(frozenset({"born"})))
        line = match_report(matches[0])
        assert "missing_required=[name]" in line

    def test_no_samples_renders_compat_one(self):
        matches = classify(library_vocab(), Perception(frozenset({"title"})))
        assert matches[0].value_compat == 1


# --- properties -------------------------------------------------------------

_names = st.text(alphabet="abcdefg _ABC", min_size=1, max_size=8)


@given(st.sets(_names, min_size=1, max_size=8))
def test_permutation_invariance(names):
    vocab = library_vocab()
    ordered = classify(vocab, Perception(frozenset(names)))
    shuffled = list(names)
    random.Random(0).shuffle(shuffled)
    again = classify(vocab, Perception(frozenset(shuffled)))
    assert [(m.class_name, m.score) for m in ordered] == [(m.class_name, m.score) for m in again]


@given(st.sets(_names, min_size=1, max_size=6))
def test_score_bounds(names):
    for match in classify(library_vocab(), Perception(frozenset(names))):
        assert 0 < match.score <= 1
        assert 0 <= match.value_compat <= 1


def test_adding_matching_name_never_decreases_name_score():
    vocab = library_vocab()
    base = {"title"}
    with_more = {"title", "author"}

    def name_score(perceived: set[str]) -> Fraction:
        matches = classify(vocab, Perception(frozenset(perceived)))
        match = next(m for m in matches if m.class_name == "Composition")
        # recover the name component: score = 4/5 j + 1/5 (compat=1)
        return (match.score - VALUE_WEIGHT) / NAME_WEIGHT

    assert name_score(with_more) >= name_score(base)


def test_oracle_equivalence_small_random_instances():
    """Independent recomputation of the published scoring rule."""
    rng = random.Random(7)
    kinds = [p.Kind.TEXT, p.Kind.INTEGER, p.Kind.DECIMAL, p.Kind.DATE, p.Kind.BOOLEAN]
    pool = ["title", "Title", "name", "year", "opera work", "Opera_Work", "flag", "amount"]

    for _ in range(60):
        vocab = p.Vocabulary("r")
        class_count = rng.randint(1, 6)
        for i in range(class_count):
            vocab = p.create_class(vocab, f"Class {i}")
            for j, attr in enumerate(rng.sample(pool, rng.randint(1, 5))):
                try:
                    vocab = p.add_attribute(
                        vocab,
                        f"Class {i}",
                        p.AttributeDef(attr, rng.choice(kinds), required=rng.random() < 0.5),
                    )
                except p.EngineError:
                    pass
        perceived = frozenset(rng.sample(pool, rng.randint(1, 8)))
        result = classify(vocab, Perception(perceived))

        # oracle: recompute from scratch
        expected = []
        norm_perceived = {normalize_name(n) for n in perceived}
        for index, cls in enumerate(vocab.classes):
            norm_attrs = {normalize_name(a.name) for a in cls.attributes}
            matched = norm_perceived & norm_attrs
            if not matched:
                continue
            jaccard = Fraction(len(matched), len(norm_perceived | norm_attrs))
            score = Fraction(4, 5) * jaccard + Fraction(1, 5)
            missing = {normalize_name(a.name) for a in cls.attributes if a.required} - matched
            expected.append((-score, len(missing), index, cls.name, score))
        expected.sort(key=lambda t: t[:3])

        assert [(m.class_name, m.score) for m in result] == [(t[3], t[4]) for t in expected]
