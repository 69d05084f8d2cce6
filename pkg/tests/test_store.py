"""Controlled input, bidirectional indexes, deletion, and persistence."""

from __future__ import annotations

import datetime
import json
import random
from decimal import Decimal

import pytest

import panoptica as p
from panoptica.errors import (
    CorruptStore,
    DanglingLink,
    DuplicateKey,
    HasIncomingLinks,
    KindMismatch,
    MissingRequired,
    RequiredLinkWouldDangle,
    UnknownAttribute,
    UnknownClass,
    UnknownObject,
)

from conftest import build_opera_store


def brute_force_indexes(store: p.Store):
    """Recompute both link indexes directly from the records."""
    forward = {}
    backward = {}
    for record in store.records():
        cls = store.vocabulary.require_class(record.class_name)
        for attr in cls.link_attributes():
            target = record.values.get(attr.name)
            if target is not None:
                forward[(record.id, attr.name)] = target
                backward.setdefault(target, set()).add((record.id, attr.name))
    return forward, backward


def mixed_vocab() -> p.Vocabulary:
    """Five classes exercising every kind, optional links, and a keyed
    intermediate relationship."""
    vocab = p.Vocabulary("mixed")
    vocab = p.create_class(vocab, "Author")
    vocab = p.add_attribute(vocab, "Author", p.AttributeDef("name", p.Kind.TEXT, required=True))
    vocab = p.create_class(vocab, "Composition")
    vocab = p.add_attribute(vocab, "Composition", p.AttributeDef("title", p.Kind.TEXT, required=True))
    vocab = p.add_attribute(vocab, "Composition", p.AttributeDef("author", p.Kind.LINK, target_class="Author"))
    vocab = p.add_attribute(vocab, "Composition", p.AttributeDef("year", p.Kind.INTEGER))
    vocab = p.add_attribute(vocab, "Composition", p.AttributeDef("fee", p.Kind.DECIMAL))
    vocab = p.add_attribute(vocab, "Composition", p.AttributeDef("premiere", p.Kind.DATE))
    vocab = p.add_attribute(vocab, "Composition", p.AttributeDef("published", p.Kind.BOOLEAN))
    vocab = p.create_class(vocab, "Venue")
    vocab = p.add_attribute(vocab, "Venue", p.AttributeDef("name", p.Kind.TEXT, required=True))
    vocab = p.create_relationship(vocab, "Performance", ["Composition", "Venue"])
    return vocab


class TestInsert:
    def test_basic_insert_and_backward_index(self, opera_store):
        store, ids = opera_store
        butterfly = ids["Madame Butterfly"]
        role = store.insert("Roles", {"name": "Suzuki", "opera": butterfly})
        assert (role, "opera") in store.backward_index[butterfly]

    def test_dangling_link_rejected(self, opera_store):
        store, _ = opera_store
        with pytest.raises(DanglingLink):
            store.insert("Roles", {"name": "Bonze", "opera": 9999})

    def test_link_to_wrong_class_rejected(self, opera_store):
        store, ids = opera_store
        with pytest.raises(DanglingLink):
            store.insert("Roles", {"name": "X", "opera": ids["Cio-Cio-San"]})

    def test_unknown_class(self, opera_store):
        store, _ = opera_store
        with pytest.raises(UnknownClass):
            store.insert("Ghost", {})

    def test_unknown_attribute(self, opera_store):
        store, _ = opera_store
        with pytest.raises(UnknownAttribute):
            store.insert("Opera Works", {"title": "Tosca", "composer": "Puccini"})

    def test_missing_required(self, opera_store):
        store, ids = opera_store
        with pytest.raises(MissingRequired):
            store.insert("Roles", {"opera": ids["Fidelio"]})

    def test_kind_checks(self):
        store = p.Store(mixed_vocab())
        author = store.insert("Author", {"name": "Verdi"})
        with pytest.raises(KindMismatch):
            store.insert("Composition", {"title": "Aida", "year": "1871"})
        with pytest.raises(KindMismatch):
            store.insert("Composition", {"title": "Aida", "year": True})
        with pytest.raises(KindMismatch):
            store.insert("Composition", {"title": 7})
        with pytest.raises(KindMismatch):
            store.insert("Composition", {"title": "Aida", "published": 1})
        composition = store.insert(
            "Composition",
            {
                "title": "Aida",
                "author": author,
                "year": 1871,
                "fee": Decimal("12.50"),
                "premiere": datetime.date(1871, 12, 24),
                "published": True,
            },
        )
        record = store.get(composition)
        assert record.values["fee"] == Decimal("12.50")

    def test_lenient_wire_shapes_for_date_and_decimal(self):
        store = p.Store(mixed_vocab())
        composition = store.insert(
            "Composition", {"title": "Otello", "premiere": "1887-02-05", "fee": "3.25"}
        )
        record = store.get(composition)
        assert record.values["premiere"] == datetime.date(1887, 2, 5)
        assert record.values["fee"] == Decimal("3.25")

    def test_none_values_are_dropped(self):
        store = p.Store(mixed_vocab())
        composition = store.insert("Composition", {"title": "Falstaff", "year": None})
        assert "year" not in store.get(composition).values

    def test_failed_insert_leaves_store_unchanged(self, opera_store):
        store, _ = opera_store
        before = len(store)
        next_before = store.next_id
        with pytest.raises(DanglingLink):
            store.insert("Roles", {"name": "X", "opera": 9999})
        assert len(store) == before
        assert store.next_id == next_before
        assert store.integrity_check() == []


class TestIntermediateObjects:
    def _performance_store(self):
        store = p.Store(mixed_vocab())
        composition = store.insert("Composition", {"title": "Aida"})
        venue = store.insert("Venue", {"name": "La Scala"})
        return store, composition, venue

    def test_label_derived_from_link_targets(self):
        store, composition, venue = self._performance_store()
        performance = store.insert("Performance", {"composition": composition, "venue": venue})
        assert store.label(performance) == "Aida / La Scala"

    def test_duplicate_key_rejected(self):
        store, composition, venue = self._performance_store()
        store.insert("Performance", {"composition": composition, "venue": venue})
        with pytest.raises(DuplicateKey):
            store.insert("Performance", {"composition": composition, "venue": venue})

    def test_explicit_label_wins(self):
        store, composition, venue = self._performance_store()
        performance = store.insert(
            "Performance", {"composition": composition, "venue": venue, "key_label": "opening night"}
        )
        assert store.label(performance) == "opening night"

    def test_key_unique_false_allows_duplicates(self):
        vocab = mixed_vocab()
        relaxed = []
        for cls in vocab.classes:
            if cls.name == "Performance":
                from dataclasses import replace

                cls = replace(cls, key_unique=False)
            relaxed.append(cls)
        vocab = p.Vocabulary(vocab.name, tuple(relaxed), vocab.version)
        store = p.Store(vocab)
        composition = store.insert("Composition", {"title": "Aida"})
        venue = store.insert("Venue", {"name": "La Scala"})
        store.insert("Performance", {"composition": composition, "venue": venue})
        store.insert("Performance", {"composition": composition, "venue": venue})
        assert store.count("Performance") == 2


class TestUpdate:
    def test_relink_moves_backward_entry(self, opera_store):
        store, ids = opera_store
        cio = ids["Cio-Cio-San"]
        butterfly = ids["Madame Butterfly"]
        fidelio = ids["Fidelio"]
        store.update(cio, {"opera": fidelio})
        assert (cio, "opera") not in store.backward_index.get(butterfly, set())
        assert (cio, "opera") in store.backward_index[fidelio]
        forward, backward = brute_force_indexes(store)
        assert store.forward_index == forward

    def test_scalar_update_leaves_indexes(self, opera_store):
        store, ids = opera_store
        before = store.forward_index
        store.update(ids["Cio-Cio-San"], {"name": "Suzuki"})
        assert store.forward_index == before
        assert store.label(ids["Cio-Cio-San"]) == "Suzuki"

    def test_unknown_object(self, opera_store):
        store, _ = opera_store
        with pytest.raises(UnknownObject):
            store.update(9999, {"name": "X"})

    def test_clearing_required_value_rejected(self, opera_store):
        store, ids = opera_store
        with pytest.raises(MissingRequired):
            store.update(ids["Cio-Cio-San"], {"name": None})

    def test_update_to_duplicate_key_rejected(self):
        store = p.Store(mixed_vocab())
        aida = store.insert("Composition", {"title": "Aida"})
        otello = store.insert("Composition", {"title": "Otello"})
        venue = store.insert("Venue", {"name": "La Scala"})
        store.insert("Performance", {"composition": aida, "venue": venue})
        second = store.insert("Performance", {"composition": otello, "venue": venue})
        with pytest.raises(DuplicateKey):
            store.update(second, {"composition": aida})

    def test_failed_update_changes_nothing(self, opera_store):
        store, ids = opera_store
        cio = ids["Cio-Cio-San"]
        before = dict(store.get(cio).values)
        with pytest.raises(DanglingLink):
            store.update(cio, {"name": "Renamed", "opera": 9999})
        assert store.get(cio).values == before
        assert store.integrity_check() == []


class TestDelete:
    def test_incoming_links_block_delete(self, opera_store):
        store, ids = opera_store
        butterfly = ids["Madame Butterfly"]
        # independent check that something really points at the opera
        pointers = [
            (r.id, name)
            for r in store.records()
            for name, value in r.values.items()
            if value == butterfly and store.vocabulary.require_class(r.class_name).attribute(name).is_link
        ]
        assert pointers
        with pytest.raises(HasIncomingLinks):
            store.delete(butterfly, detach=False)

    def test_isolated_object_deleted(self, opera_store):
        store, _ = opera_store
        isolated = store.insert("Opera Works", {"title": "Tosca"})
        store.delete(isolated, detach=False)
        assert isolated not in store
        assert store.integrity_check() == []

    def test_required_incoming_link_refuses_detach(self, opera_store):
        store, ids = opera_store
        with pytest.raises(RequiredLinkWouldDangle):
            store.delete(ids["Madame Butterfly"], detach=True)

    def test_detach_clears_optional_links(self):
        store = p.Store(mixed_vocab())
        author = store.insert("Author", {"name": "Verdi"})
        aida = store.insert("Composition", {"title": "Aida", "author": author})
        store.delete(author, detach=True)
        assert author not in store
        assert "author" not in store.get(aida).values
        assert store.integrity_check() == []

    def test_deleted_ids_never_reused(self, opera_store):
        store, _ = opera_store
        a = store.insert("Opera Works", {"title": "Tosca"})
        store.delete(a)
        b = store.insert("Opera Works", {"title": "Turandot"})
        assert b > a

    def test_unknown_object(self, opera_store):
        store, _ = opera_store
        with pytest.raises(UnknownObject):
            store.delete(9999)


class TestAuthorityAndIncoming:
    def test_authority_counts_all_dependants(self, opera_store):
        store, ids = opera_store
        butterfly = ids["Madame Butterfly"]
        brute = sum(
            1
            for record in store.records()
            for name, value in record.values.items()
            if value == butterfly
            and store.vocabulary.require_class(record.class_name).attribute(name).is_link
        )
        assert brute == 6  # 2 roles + 2 small roles + 1 silent role + 1 choir
        assert store.authority(butterfly) == brute

    def test_isolated_object_has_zero(self, opera_store):
        store, _ = opera_store
        fresh = store.insert("Opera Works", {"title": "Tosca"})
        assert store.authority(fresh) == 0

    def test_unknown_object(self, opera_store):
        store, _ = opera_store
        with pytest.raises(UnknownObject):
            store.authority(9999)

    def test_incoming_groups_and_order(self, opera_store):
        store, ids = opera_store
        groups = store.incoming(ids["Madame Butterfly"])
        assert list(groups) == [
            ("Roles", "opera"),
            ("Small Roles", "opera"),
            ("Silent Roles", "opera"),
            ("Choir", "opera"),
        ]
        labels = [store.label(i) for i in groups[("Roles", "opera")]]
        assert labels == sorted(labels)
        assert labels == ["Cio-Cio-San", "F. B. Pinkerton"]

    def test_incoming_empty_for_isolated(self, opera_store):
        store, _ = opera_store
        fresh = store.insert("Opera Works", {"title": "Tosca"})
        assert store.incoming(fresh) == {}

    def test_every_incoming_id_resolves(self, opera_store):
        store, ids = opera_store
        for members in store.incoming(ids["Madame Butterfly"]).values():
            for member in members:
                assert store.get(member) is not None


class TestIntegrityCheck:
    def test_clean_after_mixed_operations(self, opera_store):
        store, ids = opera_store
        extra = store.insert("Opera Works", {"title": "Tosca"})
        role = store.insert("Roles", {"name": "Scarpia", "opera": extra})
        store.update(role, {"opera": ids["Fidelio"]})
        store.delete(extra)
        assert store.integrity_check() == []

    def test_tampered_backward_index_detected(self, opera_store):
        store, ids = opera_store
        cio = ids["Cio-Cio-San"]
        butterfly = ids["Madame Butterfly"]
        store._backward[butterfly].discard((cio, "opera"))
        codes = {v.code for v in store.integrity_check()}
        assert "MirrorViolation" in codes

    def test_tampered_forward_index_detected(self, opera_store):
        store, ids = opera_store
        del store._forward[(ids["Cio-Cio-San"], "opera")]
        codes = {v.code for v in store.integrity_check()}
        assert "MirrorViolation" in codes

    def test_dangling_record_detected(self, opera_store):
        store, ids = opera_store
        record = store.get(ids["Cio-Cio-San"])
        record.values["opera"] = 9999
        store._rebuild_indexes()
        codes = {v.code for v in store.integrity_check()}
        assert "DanglingLink" in codes


class TestSnapshots:
    def test_round_trip(self, opera_store, tmp_path):
        store, _ = opera_store
        path = tmp_path / "objects.json"
        store.save(path)
        loaded = p.Store.load(path, store.vocabulary)
        assert loaded.next_id == store.next_id
        assert [r for r in loaded.records()] == [r for r in store.records()]
        assert loaded.forward_index == store.forward_index
        assert loaded.backward_index == store.backward_index

    def test_snapshot_shape(self, opera_store):
        store, _ = opera_store
        snapshot = store.to_snapshot()
        assert list(snapshot) == ["vocabulary_version", "next_id", "objects"]
        ids = [o["id"] for o in snapshot["objects"]]
        assert ids == sorted(ids)
        first_role = next(o for o in snapshot["objects"] if o["class"] == "Roles")
        assert isinstance(first_role["values"]["opera"], int)

    def test_scalar_wire_shapes_round_trip(self, tmp_path):
        store = p.Store(mixed_vocab())
        author = store.insert("Author", {"name": "Verdi"})
        store.insert(
            "Composition",
            {
                "title": "Aida",
                "author": author,
                "year": 1871,
                "fee": Decimal("12.50"),
                "premiere": datetime.date(1871, 12, 24),
                "published": False,
            },
        )
        path = tmp_path / "objects.json"
        store.save(path)
        loaded = p.Store.load(path, store.vocabulary)
        values = loaded.get(2).values
        assert values["fee"] == Decimal("12.50")
        assert values["premiere"] == datetime.date(1871, 12, 24)
        assert values["published"] is False
        assert values["year"] == 1871

    def test_corrupt_dangling_refused(self, opera_store, tmp_path):
        store, _ = opera_store
        snapshot = store.to_snapshot()
        snapshot["objects"][-1]["values"]["opera"] = 9999
        path = tmp_path / "objects.json"
        path.write_text(json.dumps(snapshot), encoding="utf-8")
        with pytest.raises(CorruptStore):
            p.Store.load(path, store.vocabulary)

    def test_vocabulary_version_mismatch_refused(self, opera_store, tmp_path):
        store, _ = opera_store
        snapshot = store.to_snapshot()
        snapshot["vocabulary_version"] += 1
        with pytest.raises(CorruptStore):
            p.Store.from_snapshot(snapshot, store.vocabulary)

    def test_unreadable_file_refused(self, opera_store, tmp_path):
        path = tmp_path / "objects.json"
        path.write_text("{broken", encoding="utf-8")
        store, _ = opera_store
        with pytest.raises(CorruptStore):
            p.Store.load(path, store.vocabulary)


class TestMirrorProperty:
    """Randomized operation sequences keep the two indexes exact mirrors."""

    def run_sequence(self, seed: int) -> p.Store:
        rng = random.Random(seed)
        store = p.Store(mixed_vocab())
        expected_errors = (
            DanglingLink,
            DuplicateKey,
            HasIncomingLinks,
            MissingRequired,
            RequiredLinkWouldDangle,
            UnknownObject,
        )
        for step in range(rng.randint(10, 60)):
            action = rng.random()
            ids = store.object_ids()
            try:
                if action < 0.45 or not ids:
                    choice = rng.random()
                    if choice < 0.3:
                        store.insert("Author", {"name": f"author {step}"})
                    elif choice < 0.6:
                        values = {"title": f"work {step}"}
                        if ids and rng.random() < 0.7:
                            values["author"] = rng.choice(ids)
                        store.insert("Composition", values)
                    elif choice < 0.8:
                        store.insert("Venue", {"name": f"venue {step}"})
                    elif len(ids) >= 2:
                        store.insert(
                            "Performance",
                            {"composition": rng.choice(ids), "venue": rng.choice(ids)},
                        )
                elif action < 0.75:
                    target = rng.choice(ids)
                    record = store.get(target)
                    if record.class_name == "Composition" and rng.random() < 0.5:
                        store.update(target, {"author": rng.choice(ids)})
                    else:
                        cls = store.vocabulary.require_class(record.class_name)
                        if cls.label_attribute:
                            store.update(target, {cls.label_attribute: f"renamed {step}"})
                else:
                    store.delete(rng.choice(ids), detach=rng.random() < 0.5)
            except expected_errors:
                pass
        return store

    @pytest.mark.parametrize("seed", range(25))
    def test_indexes_mirror_brute_force(self, seed):
        store = self.run_sequence(seed)
        forward, backward = brute_force_indexes(store)
        assert store.forward_index == forward
        assert store.backward_index == backward
        assert store.integrity_check() == []

    @pytest.mark.parametrize("seed", range(25))
    def test_authority_matches_brute_force(self, seed):
        store = self.run_sequence(seed)
        for object_id in store.object_ids():
            brute = sum(
                1
                for record in store.records()
                for name, value in record.values.items()
                if value == object_id
                and store.vocabulary.require_class(record.class_name).attribute(name).is_link
            )
            assert store.authority(object_id) == brute
