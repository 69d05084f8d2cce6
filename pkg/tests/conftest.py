"""Shared fixtures: the opera dataset used across the suite.

The dataset mirrors the canonical walkthrough: four operas, and the named
dependants of Madame Butterfly spread over the dependant classes.
"""

from __future__ import annotations

import pytest

import panoptica as p

DEPENDANT_CLASSES = ("Roles", "Small Roles", "Silent Roles", "Choir", "Orchestra Cast", "Scenic Music")

OPERAS = ("Don Giovanni", "Fidelio", "Figaro's wedding", "Madame Butterfly")

BUTTERFLY_DEPENDANTS = {
    "Roles": ("Cio-Cio-San", "F. B. Pinkerton"),
    "Small Roles": ("Bonze", "Cio-Cio-San's mother"),
    "Silent Roles": ("Dolore",),
    "Choir": ("Female Choir",),
}


def build_opera_vocabulary() -> p.Vocabulary:
    vocab = p.Vocabulary("opera")
    vocab = p.create_class(vocab, "Opera Works")
    vocab = p.add_attribute(vocab, "Opera Works", p.AttributeDef("title", p.Kind.TEXT, required=True))
    for class_name in DEPENDANT_CLASSES:
        vocab = p.create_class(vocab, class_name)
        vocab = p.add_attribute(vocab, class_name, p.AttributeDef("name", p.Kind.TEXT, required=True))
        vocab = p.add_attribute(
            vocab, class_name, p.AttributeDef("opera", p.Kind.LINK, target_class="Opera Works", required=True)
        )
    return vocab


def build_opera_store() -> tuple[p.Store, dict[str, int]]:
    """The loaded dataset plus a label -> id lookup for the inserted objects."""
    store = p.Store(build_opera_vocabulary())
    ids: dict[str, int] = {}
    for title in OPERAS:
        ids[title] = store.insert("Opera Works", {"title": title})
    butterfly = ids["Madame Butterfly"]
    for class_name, names in BUTTERFLY_DEPENDANTS.items():
        for name in names:
            ids[name] = store.insert(class_name, {"name": name, "opera": butterfly})
    return store, ids


@pytest.fixture
def opera_vocab() -> p.Vocabulary:
    return build_opera_vocabulary()


@pytest.fixture
def opera_store() -> tuple[p.Store, dict[str, int]]:
    return build_opera_store()
