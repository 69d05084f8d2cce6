"""The data vocabulary: classes, attributes, and link structure.

A vocabulary is an immutable value. Every mutating operation returns a new
vocabulary with ``version`` incremented, so snapshots can be shared freely
across threads; writers are serialized by the caller (the gateway).

Two kinds of classes exist: ordinary classes, and intermediate classes that
realize m:n (and higher-arity) relationships through one link attribute per
participant. The link attributes of an intermediate class form its
concatenated key in declaration order.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import (
    ArityTooSmall,
    DuplicateAttribute,
    DuplicateClass,
    EmptyName,
    InvalidVocabulary,
    UnknownClass,
    UnknownTargetClass,
)
from .values import Kind

_WS_RUN = re.compile(r"\s+")

_SQL_TYPES = {
    Kind.TEXT: "VARCHAR",
    Kind.INTEGER: "BIGINT",
    Kind.DECIMAL: "DECIMAL(18,6)",
    Kind.DATE: "DATE",
    Kind.BOOLEAN: "BOOLEAN",
}


def normalize_name(name: str) -> str:
    """Lowercase, trim, and collapse internal whitespace runs to ``_``."""
    return _WS_RUN.sub("_", name.strip().lower())


@dataclass(frozen=True)
class AttributeDef:
    """One attribute of a class: a scalar slot or a link to a target class."""

    name: str
    kind: Kind
    target_class: str | None = None
    required: bool = False

    def __post_init__(self) -> None:
        if not self.name or not self.name.strip():
            raise EmptyName("attribute name must be nonempty")
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.LINK:
            if not self.target_class:
                raise ValueError(f"link attribute {self.name!r} needs a target_class")
        elif self.target_class is not None:
            raise ValueError(f"scalar attribute {self.name!r} cannot have a target_class")

    @property
    def is_link(self) -> bool:
        return self.kind is Kind.LINK


@dataclass(frozen=True)
class ClassDef:
    """A class of objects sharing the same attribute set.

    ``label_attribute`` names the required text attribute used as an object's
    display label. For intermediate classes the label may be left to the store,
    which derives it from the labels of the linked objects.
    """

    name: str
    attributes: tuple[AttributeDef, ...] = ()
    is_intermediate: bool = False
    label_attribute: str | None = None
    key_unique: bool = True

    def attribute(self, name: str) -> AttributeDef | None:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None

    def link_attributes(self) -> tuple[AttributeDef, ...]:
        return tuple(a for a in self.attributes if a.is_link)

    def scalar_attributes(self) -> tuple[AttributeDef, ...]:
        return tuple(a for a in self.attributes if not a.is_link)

    def key_attributes(self) -> tuple[AttributeDef, ...]:
        """The concatenated key of an intermediate class: its link attributes
        in declaration order. Empty for ordinary classes."""
        return self.link_attributes() if self.is_intermediate else ()

    def required_attributes(self) -> tuple[AttributeDef, ...]:
        return tuple(a for a in self.attributes if a.required)


@dataclass(frozen=True)
class Vocabulary:
    """An ordered collection of class definitions plus a version counter."""

    name: str
    classes: tuple[ClassDef, ...] = ()
    version: int = 0

    def class_def(self, name: str) -> ClassDef | None:
        for cls in self.classes:
            if cls.name == name:
                return cls
        return None

    def require_class(self, name: str) -> ClassDef:
        cls = self.class_def(name)
        if cls is None:
            raise UnknownClass(f"no class named {name!r}")
        return cls

    def class_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.classes)

    def declaration_index(self, name: str) -> int:
        for i, cls in enumerate(self.classes):
            if cls.name == name:
                return i
        raise UnknownClass(f"no class named {name!r}")


@dataclass(frozen=True)
class Diagnostic:
    """One well-formedness violation found by :func:`validate`."""

    code: str
    message: str
    class_name: str | None = None
    attribute: str | None = None

    def __str__(self) -> str:
        where = self.class_name or ""
        if self.attribute:
            where = f"{where}.{self.attribute}"
        return f"{self.code} [{where}]: {self.message}" if where else f"{self.code}: {self.message}"


# --- operations ----------------------------------------------------------


def create_class(vocab: Vocabulary, name: str, is_intermediate: bool = False) -> Vocabulary:
    """Add an empty class; fails on duplicate or blank names."""
    if not name or not name.strip():
        raise EmptyName("class name must be nonempty")
    if vocab.class_def(name) is not None:
        raise DuplicateClass(f"class {name!r} already exists")
    cls = ClassDef(name=name, is_intermediate=is_intermediate)
    return replace(vocab, classes=vocab.classes + (cls,), version=vocab.version + 1)


def add_attribute(vocab: Vocabulary, class_name: str, attr: AttributeDef) -> Vocabulary:
    """Append an attribute to a class.

    The first required text attribute of a class becomes its label attribute
    unless one is already designated.
    """
    cls = vocab.require_class(class_name)
    if cls.attribute(attr.name) is not None:
        raise DuplicateAttribute(f"{class_name!r} already has attribute {attr.name!r}")
    if attr.is_link and vocab.class_def(attr.target_class) is None:
        raise UnknownTargetClass(f"link target {attr.target_class!r} is not a class")
    label = cls.label_attribute
    if label is None and attr.kind is Kind.TEXT and attr.required:
        label = attr.name
    updated = replace(cls, attributes=cls.attributes + (attr,), label_attribute=label)
    return _replace_class(vocab, updated)


def create_relationship(
    vocab: Vocabulary,
    name: str,
    participants: Sequence[str],
    extra: Iterable[AttributeDef] = (),
) -> Vocabulary:
    """Create an intermediate class realizing a relationship of arity >= 2.

    One required link attribute is created per participant, in order, named
    after the normalized participant class name (suffixed on repeats so a
    class may participate more than once). Extra scalar attributes follow.
    The label defaults to the first required text attribute among ``extra``;
    otherwise a required text attribute ``key_label`` is synthesized, whose
    value the store derives from the linked objects when not supplied.
    """
    participants = list(participants)
    if len(participants) < 2:
        raise ArityTooSmall(f"relationship needs >= 2 participants, got {len(participants)}")
    for p in participants:
        vocab.require_class(p)
    if not name or not name.strip():
        raise EmptyName("class name must be nonempty")
    if vocab.class_def(name) is not None:
        raise DuplicateClass(f"class {name!r} already exists")

    attrs: list[AttributeDef] = []
    used: set[str] = set()
    for p in participants:
        base = normalize_name(p)
        link_name, n = base, 1
        while link_name in used:
            n += 1
            link_name = f"{base}_{n}"
        used.add(link_name)
        attrs.append(AttributeDef(link_name, Kind.LINK, target_class=p, required=True))

    extra = tuple(extra)
    for attr in extra:
        if attr.name in used:
            raise DuplicateAttribute(f"attribute {attr.name!r} repeats in relationship {name!r}")
        used.add(attr.name)
        attrs.append(attr)

    label = next((a.name for a in extra if a.kind is Kind.TEXT and a.required), None)
    if label is None:
        label, n = "key_label", 1
        while label in used:
            n += 1
            label = f"key_label_{n}"
        attrs.append(AttributeDef(label, Kind.TEXT, required=True))

    cls = ClassDef(
        name=name,
        attributes=tuple(attrs),
        is_intermediate=True,
        label_attribute=label,
        key_unique=True,
    )
    return replace(vocab, classes=vocab.classes + (cls,), version=vocab.version + 1)


def validate(vocab: Vocabulary) -> list[Diagnostic]:
    """Return every well-formedness violation; empty iff the vocabulary is
    safe to compile and to load objects against."""
    diags: list[Diagnostic] = []
    seen_classes: set[str] = set()
    class_names = set(vocab.class_names())

    for cls in vocab.classes:
        if not cls.name or not cls.name.strip():
            diags.append(Diagnostic("EmptyName", "class name is empty", cls.name))
        if cls.name in seen_classes:
            diags.append(Diagnostic("DuplicateClass", f"class {cls.name!r} declared twice", cls.name))
        seen_classes.add(cls.name)

        seen_attrs: set[str] = set()
        for attr in cls.attributes:
            if attr.name in seen_attrs:
                diags.append(
                    Diagnostic("DuplicateAttribute", f"attribute {attr.name!r} declared twice", cls.name, attr.name)
                )
            seen_attrs.add(attr.name)
            if attr.is_link and attr.target_class not in class_names:
                diags.append(
                    Diagnostic(
                        "UnknownTargetClass",
                        f"link target {attr.target_class!r} is not a class",
                        cls.name,
                        attr.name,
                    )
                )

        if cls.label_attribute is None:
            diags.append(Diagnostic("MissingLabel", "no label attribute designated", cls.name))
        else:
            label = cls.attribute(cls.label_attribute)
            if label is None:
                diags.append(
                    Diagnostic("MissingLabel", f"label attribute {cls.label_attribute!r} is not defined", cls.name)
                )
            elif label.kind is not Kind.TEXT or not label.required:
                diags.append(
                    Diagnostic(
                        "BadLabel",
                        f"label attribute {cls.label_attribute!r} must be required text",
                        cls.name,
                        label.name,
                    )
                )

        if cls.is_intermediate and len(cls.link_attributes()) < 2:
            diags.append(
                Diagnostic(
                    "ArityTooSmall",
                    f"intermediate class has {len(cls.link_attributes())} link attribute(s), needs >= 2",
                    cls.name,
                )
            )
    return diags


# --- relational compiler ---------------------------------------------------


def column_name(attr: AttributeDef) -> str:
    """Physical column for an attribute: links get a ``_ref`` suffix."""
    return f"{attr.name}_ref" if attr.is_link else attr.name


def compile_ddl(vocab: Vocabulary) -> str:
    """Compile the vocabulary to deterministic ANSI-SQL DDL.

    One CREATE TABLE per class in declaration order (surrogate ``id`` key,
    one column per attribute, foreign keys for links), followed by one
    CREATE INDEX per foreign-key column so backward traversal stays indexed.
    Identifiers are double-quoted verbatim.
    """
    problems = validate(vocab)
    if problems:
        raise InvalidVocabulary("; ".join(str(d) for d in problems))

    lines: list[str] = [
        f'-- schema for vocabulary "{vocab.name}" (version {vocab.version})',
        f"-- {len(vocab.classes)} table(s)",
        "",
    ]
    index_stmts: list[str] = []

    for cls in vocab.classes:
        cols = ['  "id" BIGINT PRIMARY KEY']
        for attr in cls.attributes:
            null = " NOT NULL" if attr.required else ""
            if attr.is_link:
                cols.append(
                    f'  "{column_name(attr)}" BIGINT{null} REFERENCES "{attr.target_class}"("id")'
                )
                index_stmts.append(
                    f'CREATE INDEX "idx_{normalize_name(cls.name)}__{normalize_name(column_name(attr))}" '
                    f'ON "{cls.name}"("{column_name(attr)}");'
                )
            else:
                cols.append(f'  "{attr.name}" {_SQL_TYPES[attr.kind]}{null}')
        if cls.is_intermediate and cls.key_unique:
            key_cols = ", ".join(f'"{column_name(a)}"' for a in cls.key_attributes())
            cols.append(f'  CONSTRAINT "uq_{normalize_name(cls.name)}__key" UNIQUE ({key_cols})')
        lines.append(f'CREATE TABLE "{cls.name}" (')
        lines.append(",\n".join(cols))
        lines.append(");")
        lines.append("")

    for stmt in index_stmts:
        lines.append(stmt)
    if index_stmts:
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


# --- document format -------------------------------------------------------


def to_document(vocab: Vocabulary) -> dict[str, Any]:
    """The canonical JSON shape of a vocabulary; field order is fixed."""
    classes = []
    for cls in vocab.classes:
        attrs = []
        for attr in cls.attributes:
            doc: dict[str, Any] = {"name": attr.name, "kind": attr.kind.value}
            if attr.is_link:
                doc["target_class"] = attr.target_class
            doc["required"] = attr.required
            attrs.append(doc)
        classes.append(
            {
                "name": cls.name,
                "is_intermediate": cls.is_intermediate,
                "label_attribute": cls.label_attribute,
                "key_unique": cls.key_unique,
                "attributes": attrs,
            }
        )
    return {"name": vocab.name, "version": vocab.version, "classes": classes}


def from_document(doc: dict[str, Any]) -> Vocabulary:
    """Parse the canonical document shape back into a vocabulary."""
    try:
        classes = []
        for cdoc in doc.get("classes", []):
            attrs = tuple(
                AttributeDef(
                    name=adoc["name"],
                    kind=Kind(adoc["kind"]),
                    target_class=adoc.get("target_class"),
                    required=bool(adoc.get("required", False)),
                )
                for adoc in cdoc.get("attributes", [])
            )
            classes.append(
                ClassDef(
                    name=cdoc["name"],
                    attributes=attrs,
                    is_intermediate=bool(cdoc.get("is_intermediate", False)),
                    label_attribute=cdoc.get("label_attribute"),
                    key_unique=bool(cdoc.get("key_unique", True)),
                )
            )
        return Vocabulary(name=doc["name"], classes=tuple(classes), version=int(doc.get("version", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidVocabulary(f"malformed vocabulary document: {exc}") from exc


def save(vocab: Vocabulary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_document(vocab), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load(path: str | Path) -> Vocabulary:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidVocabulary(f"cannot read vocabulary document {path}: {exc}") from exc
    return from_document(doc)


def _replace_class(vocab: Vocabulary, updated: ClassDef) -> Vocabulary:
    classes = tuple(updated if c.name == updated.name else c for c in vocab.classes)
    return replace(vocab, classes=classes, version=vocab.version + 1)
