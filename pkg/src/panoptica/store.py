"""The known object space: records, controlled input, and link indexes.

Every mutation validates fully before touching state, so a failed call leaves
the store unchanged. Links are indexed in both directions and the two indexes
are exact mirrors at all times; :meth:`Store.integrity_check` re-verifies the
whole invariant set from scratch.

One writer at a time. Readers can share a store between mutations; the
gateway serializes all access with a lock.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Mapping

from .errors import (
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
from .values import Kind, check_value, from_wire, to_wire
from .vocabulary import ClassDef, Vocabulary

ObjectId = int

# Separator used when deriving an intermediate object's label from the labels
# of its link targets.
KEY_LABEL_SEPARATOR = " / "


@dataclass(frozen=True)
class ObjectRecord:
    """One stored object. ``values`` maps attribute names to normalized
    scalar values, or target ids for link attributes. Treat as immutable;
    the store replaces records instead of mutating them."""

    id: ObjectId
    class_name: str
    values: dict[str, Any]


@dataclass(frozen=True)
class Violation:
    """One integrity violation found by a full-store scan."""

    code: str
    message: str
    object_id: ObjectId | None = None

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class Store:
    """In-memory object store bound to one vocabulary."""

    def __init__(self, vocabulary: Vocabulary) -> None:
        self._vocabulary = vocabulary
        self._records: dict[ObjectId, ObjectRecord] = {}
        self._forward: dict[tuple[ObjectId, str], ObjectId] = {}
        self._backward: dict[ObjectId, set[tuple[ObjectId, str]]] = {}
        self._next_id: ObjectId = 1

    # --- introspection ----------------------------------------------------

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocabulary

    @property
    def next_id(self) -> ObjectId:
        return self._next_id

    @property
    def forward_index(self) -> dict[tuple[ObjectId, str], ObjectId]:
        """Copy of the (source, attribute) -> target index."""
        return dict(self._forward)

    @property
    def backward_index(self) -> dict[ObjectId, set[tuple[ObjectId, str]]]:
        """Copy of the target -> {(source, attribute)} index."""
        return {k: set(v) for k, v in self._backward.items() if v}

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, object_id: ObjectId) -> bool:
        return object_id in self._records

    def object_ids(self) -> list[ObjectId]:
        return sorted(self._records)

    def records(self) -> Iterator[ObjectRecord]:
        for object_id in sorted(self._records):
            yield self._records[object_id]

    def get(self, object_id: ObjectId) -> ObjectRecord:
        record = self._records.get(object_id)
        if record is None:
            raise UnknownObject(f"no object with id {object_id}")
        return record

    def label(self, object_id: ObjectId) -> str:
        record = self.get(object_id)
        cls = self._vocabulary.class_def(record.class_name)
        if cls is None or cls.label_attribute is None:
            return ""
        value = record.values.get(cls.label_attribute)
        return value if isinstance(value, str) else ""

    def objects_of(self, class_name: str) -> list[ObjectRecord]:
        """All objects of a class, ordered by (label, id)."""
        self._vocabulary.require_class(class_name)
        members = [r for r in self._records.values() if r.class_name == class_name]
        members.sort(key=lambda r: (self.label(r.id), r.id))
        return members

    def count(self, class_name: str) -> int:
        self._vocabulary.require_class(class_name)
        return sum(1 for r in self._records.values() if r.class_name == class_name)

    # --- mutation -----------------------------------------------------------

    def insert(self, class_name: str, values: Mapping[str, Any]) -> ObjectId:
        """Controlled input: kind checks, required attributes, referential
        integrity, and (for keyed intermediate classes) key uniqueness.
        Returns the new object's id; ids strictly increase and never recur."""
        cls = self._require_class(class_name)
        normalized = self._normalize(cls, values)
        self._derive_label(cls, normalized)
        self._check_required(cls, normalized)
        self._check_key(cls, normalized, exclude=None)

        object_id = self._next_id
        self._next_id += 1
        record = ObjectRecord(object_id, cls.name, normalized)
        self._records[object_id] = record
        for attr in cls.link_attributes():
            target = normalized.get(attr.name)
            if target is not None:
                self._link(object_id, attr.name, target)
        return object_id

    def update(self, object_id: ObjectId, values: Mapping[str, Any]) -> None:
        """Partial update; a ``None`` value clears an attribute. Changed link
        attributes are reindexed on both sides."""
        record = self.get(object_id)
        cls = self._require_class(record.class_name)

        merged = dict(record.values)
        for name, value in values.items():
            attr = cls.attribute(name)
            if attr is None:
                raise UnknownAttribute(f"{cls.name!r} has no attribute {name!r}")
            if value is None:
                merged.pop(name, None)
            else:
                merged[name] = self._check_kind(cls, attr, value)
        for attr in cls.link_attributes():
            target = merged.get(attr.name)
            if target is not None:
                self._check_target(cls, attr, target)
        self._derive_label(cls, merged)
        self._check_required(cls, merged)
        self._check_key(cls, merged, exclude=object_id)

        old_links = {a.name: record.values.get(a.name) for a in cls.link_attributes()}
        new_links = {a.name: merged.get(a.name) for a in cls.link_attributes()}
        self._records[object_id] = ObjectRecord(object_id, cls.name, merged)
        for name in old_links:
            if old_links[name] != new_links[name]:
                if old_links[name] is not None:
                    self._unlink(object_id, name, old_links[name])
                if new_links[name] is not None:
                    self._link(object_id, name, new_links[name])

    def delete(self, object_id: ObjectId, detach: bool = False) -> None:
        """Remove an object.

        Refused while incoming links exist unless ``detach`` clears them;
        refused outright if any incoming link is required on its source, since
        detaching would strand that source without a mandatory value.
        """
        record = self.get(object_id)
        incoming = sorted(self._backward.get(object_id, set()))
        if incoming and not detach:
            raise HasIncomingLinks(f"object {object_id} has {len(incoming)} incoming link(s)")
        for source_id, attr_name in incoming:
            source = self._records[source_id]
            source_cls = self._require_class(source.class_name)
            attr = source_cls.attribute(attr_name)
            if attr is not None and attr.required:
                raise RequiredLinkWouldDangle(
                    f"{source_cls.name!r}.{attr_name} on object {source_id} is required"
                )

        for source_id, attr_name in incoming:
            source = self._records[source_id]
            trimmed = dict(source.values)
            trimmed.pop(attr_name, None)
            self._records[source_id] = ObjectRecord(source_id, source.class_name, trimmed)
            self._unlink(source_id, attr_name, object_id)

        cls = self._require_class(record.class_name)
        for attr in cls.link_attributes():
            target = record.values.get(attr.name)
            if target is not None:
                self._unlink(object_id, attr.name, target)
        self._backward.pop(object_id, None)
        del self._records[object_id]

    # --- link queries -------------------------------------------------------

    def authority(self, object_id: ObjectId) -> int:
        """Number of incoming links."""
        self.get(object_id)
        return len(self._backward.get(object_id, ()))

    def incoming(self, object_id: ObjectId) -> dict[tuple[str, str], list[ObjectId]]:
        """Dependent objects grouped by (source class, source attribute).

        Groups follow class declaration order then attribute declaration
        order; members are ordered by (label, id).
        """
        self.get(object_id)
        grouped: dict[tuple[str, str], list[ObjectId]] = {}
        for source_id, attr_name in self._backward.get(object_id, set()):
            source = self._records[source_id]
            grouped.setdefault((source.class_name, attr_name), []).append(source_id)

        def group_order(key: tuple[str, str]) -> tuple[int, int]:
            class_name, attr_name = key
            cls = self._vocabulary.require_class(class_name)
            attr_index = next(i for i, a in enumerate(cls.attributes) if a.name == attr_name)
            return self._vocabulary.declaration_index(class_name), attr_index

        ordered: dict[tuple[str, str], list[ObjectId]] = {}
        for key in sorted(grouped, key=group_order):
            ordered[key] = sorted(grouped[key], key=lambda i: (self.label(i), i))
        return ordered

    def forward_target(self, object_id: ObjectId, attribute: str) -> ObjectId | None:
        return self._forward.get((object_id, attribute))

    def neighbors(self, object_id: ObjectId) -> set[ObjectId]:
        """Objects directly linked to ``object_id`` in either direction."""
        record = self.get(object_id)
        cls = self._require_class(record.class_name)
        out = {record.values[a.name] for a in cls.link_attributes() if a.name in record.values}
        inbound = {source for source, _ in self._backward.get(object_id, set())}
        return out | inbound

    # --- integrity ------------------------------------------------------------

    def integrity_check(self) -> list[Violation]:
        """Full scan of every record and index invariant."""
        violations: list[Violation] = []
        expected_forward: dict[tuple[ObjectId, str], ObjectId] = {}

        for object_id in sorted(self._records):
            record = self._records[object_id]
            if object_id >= self._next_id:
                violations.append(Violation("IdAllocation", f"id {object_id} >= next_id {self._next_id}", object_id))
            cls = self._vocabulary.class_def(record.class_name)
            if cls is None:
                violations.append(
                    Violation("UnknownClass", f"object {object_id} has unknown class {record.class_name!r}", object_id)
                )
                continue
            for name, value in record.values.items():
                attr = cls.attribute(name)
                if attr is None:
                    violations.append(
                        Violation("UnknownAttribute", f"object {object_id} has unknown attribute {name!r}", object_id)
                    )
                    continue
                try:
                    check_value(attr.kind, value)
                except ValueError as exc:
                    violations.append(Violation("KindMismatch", f"object {object_id}.{name}: {exc}", object_id))
                    continue
                if attr.is_link:
                    # The index mirrors record state even for a dangling value;
                    # dangling-ness is its own violation, not a mirror defect.
                    expected_forward[(object_id, name)] = value
                    target = self._records.get(value)
                    if target is None:
                        violations.append(
                            Violation("DanglingLink", f"object {object_id}.{name} -> missing id {value}", object_id)
                        )
                    elif target.class_name != attr.target_class:
                        violations.append(
                            Violation(
                                "DanglingLink",
                                f"object {object_id}.{name} -> {value} of class {target.class_name!r}, "
                                f"expected {attr.target_class!r}",
                                object_id,
                            )
                        )
            for attr in cls.required_attributes():
                if record.values.get(attr.name) is None:
                    violations.append(
                        Violation(
                            "MissingRequired", f"object {object_id} lacks required {attr.name!r}", object_id
                        )
                    )

        violations.extend(self._check_mirror(expected_forward))
        violations.extend(self._check_keys())
        return violations

    def _check_mirror(self, expected_forward: dict[tuple[ObjectId, str], ObjectId]) -> list[Violation]:
        violations: list[Violation] = []
        for key, target in sorted(self._forward.items()):
            if expected_forward.get(key) != target:
                violations.append(
                    Violation("MirrorViolation", f"forward entry {key} -> {target} has no matching record link", key[0])
                )
            if key not in self._backward.get(target, set()):
                violations.append(
                    Violation("MirrorViolation", f"forward entry {key} -> {target} missing from backward index", key[0])
                )
        for key, target in sorted(expected_forward.items()):
            if self._forward.get(key) != target:
                violations.append(
                    Violation("MirrorViolation", f"record link {key} -> {target} missing from forward index", key[0])
                )
        for target, entries in sorted(self._backward.items()):
            for entry in sorted(entries):
                if self._forward.get(entry) != target:
                    violations.append(
                        Violation("MirrorViolation", f"backward entry {target} <- {entry} has no forward mirror", target)
                    )
        return violations

    def _check_keys(self) -> list[Violation]:
        violations: list[Violation] = []
        for cls in self._vocabulary.classes:
            if not (cls.is_intermediate and cls.key_unique and cls.key_attributes()):
                continue
            seen: dict[tuple[Any, ...], ObjectId] = {}
            for record in self.objects_of(cls.name):
                key = tuple(record.values.get(a.name) for a in cls.key_attributes())
                if key in seen:
                    violations.append(
                        Violation(
                            "DuplicateKey",
                            f"objects {seen[key]} and {record.id} share key {key} in class {cls.name!r}",
                            record.id,
                        )
                    )
                else:
                    seen[key] = record.id
        return violations

    # --- persistence ------------------------------------------------------------

    def to_snapshot(self) -> dict[str, Any]:
        objects = []
        for record in self.records():
            cls = self._vocabulary.class_def(record.class_name)
            values = {}
            for name, value in record.values.items():
                attr = cls.attribute(name) if cls else None
                values[name] = to_wire(attr.kind, value) if attr else value
            objects.append({"id": record.id, "class": record.class_name, "values": values})
        return {
            "vocabulary_version": self._vocabulary.version,
            "next_id": self._next_id,
            "objects": objects,
        }

    def save(self, path: str | Path) -> None:
        """Atomic snapshot write: temp file in the same directory, then rename."""
        path = Path(path)
        payload = json.dumps(self.to_snapshot(), indent=2, ensure_ascii=False) + "\n"
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(payload)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

    @classmethod
    def from_snapshot(cls, snapshot: dict[str, Any], vocabulary: Vocabulary) -> "Store":
        """Rebuild a store from a snapshot document, rebuilding both index
        directions, then refuse the file if any integrity violation remains."""
        try:
            version = int(snapshot["vocabulary_version"])
            next_id = int(snapshot["next_id"])
            objects = list(snapshot["objects"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptStore(f"malformed snapshot: {exc}") from exc
        if version != vocabulary.version:
            raise CorruptStore(
                f"snapshot was taken against vocabulary version {version}, active version is {vocabulary.version}"
            )

        store = cls(vocabulary)
        for doc in objects:
            try:
                object_id = int(doc["id"])
                class_name = doc["class"]
                raw_values = dict(doc["values"])
            except (KeyError, TypeError, ValueError) as exc:
                raise CorruptStore(f"malformed object entry: {exc}") from exc
            if object_id in store._records:
                raise CorruptStore(f"duplicate object id {object_id}")
            class_def = vocabulary.class_def(class_name)
            values = {}
            for name, value in raw_values.items():
                attr = class_def.attribute(name) if class_def else None
                values[name] = from_wire(attr.kind, value) if attr else value
            store._records[object_id] = ObjectRecord(object_id, class_name, values)
        store._next_id = next_id
        store._rebuild_indexes()

        violations = store.integrity_check()
        if violations:
            raise CorruptStore("; ".join(str(v) for v in violations[:5]))
        return store

    @classmethod
    def load(cls, path: str | Path, vocabulary: Vocabulary) -> "Store":
        try:
            snapshot = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptStore(f"cannot read snapshot {path}: {exc}") from exc
        if not isinstance(snapshot, dict):
            raise CorruptStore("snapshot root must be an object")
        return cls.from_snapshot(snapshot, vocabulary)

    def _rebuild_indexes(self) -> None:
        self._forward.clear()
        self._backward.clear()
        for record in self._records.values():
            cls = self._vocabulary.class_def(record.class_name)
            if cls is None:
                continue
            for attr in cls.link_attributes():
                target = record.values.get(attr.name)
                if isinstance(target, int) and not isinstance(target, bool):
                    self._forward[(record.id, attr.name)] = target
                    self._backward.setdefault(target, set()).add((record.id, attr.name))

    # --- internals ------------------------------------------------------------

    def _require_class(self, class_name: str) -> ClassDef:
        return self._vocabulary.require_class(class_name)

    def _normalize(self, cls: ClassDef, values: Mapping[str, Any]) -> dict[str, Any]:
        normalized: dict[str, Any] = {}
        for name, value in values.items():
            if value is None:
                continue
            attr = cls.attribute(name)
            if attr is None:
                raise UnknownAttribute(f"{cls.name!r} has no attribute {name!r}")
            normalized[name] = self._check_kind(cls, attr, value)
        for attr in cls.link_attributes():
            target = normalized.get(attr.name)
            if target is not None:
                self._check_target(cls, attr, target)
        return normalized

    def _check_kind(self, cls: ClassDef, attr, value: Any) -> Any:
        try:
            return check_value(attr.kind, value)
        except ValueError as exc:
            raise KindMismatch(f"{cls.name!r}.{attr.name}: {exc}") from None

    def _check_target(self, cls: ClassDef, attr, target: ObjectId) -> None:
        record = self._records.get(target)
        if record is None:
            raise DanglingLink(f"{cls.name!r}.{attr.name} -> no object with id {target}")
        if record.class_name != attr.target_class:
            raise DanglingLink(
                f"{cls.name!r}.{attr.name} -> object {target} is {record.class_name!r}, "
                f"expected {attr.target_class!r}"
            )

    def _derive_label(self, cls: ClassDef, values: dict[str, Any]) -> None:
        """Fill the label of an intermediate object from its link targets'
        labels when the caller did not supply one."""
        if not cls.is_intermediate or cls.label_attribute is None:
            return
        if values.get(cls.label_attribute) is not None:
            return
        parts = []
        for attr in cls.key_attributes():
            target = values.get(attr.name)
            if target is None or target not in self._records:
                return
            parts.append(self.label(target))
        if parts:
            values[cls.label_attribute] = KEY_LABEL_SEPARATOR.join(parts)

    def _check_required(self, cls: ClassDef, values: Mapping[str, Any]) -> None:
        for attr in cls.required_attributes():
            if values.get(attr.name) is None:
                raise MissingRequired(f"{cls.name!r}.{attr.name} is required")

    def _check_key(self, cls: ClassDef, values: Mapping[str, Any], exclude: ObjectId | None) -> None:
        if not (cls.is_intermediate and cls.key_unique and cls.key_attributes()):
            return
        key = tuple(values.get(a.name) for a in cls.key_attributes())
        for record in self._records.values():
            if record.id == exclude or record.class_name != cls.name:
                continue
            existing = tuple(record.values.get(a.name) for a in cls.key_attributes())
            if existing == key:
                raise DuplicateKey(f"key {key} already taken by object {record.id} in class {cls.name!r}")

    def _link(self, source: ObjectId, attribute: str, target: ObjectId) -> None:
        self._forward[(source, attribute)] = target
        self._backward.setdefault(target, set()).add((source, attribute))

    def _unlink(self, source: ObjectId, attribute: str, target: ObjectId) -> None:
        self._forward.pop((source, attribute), None)
        entries = self._backward.get(target)
        if entries is not None:
            entries.discard((source, attribute))
            if not entries:
                del self._backward[target]
