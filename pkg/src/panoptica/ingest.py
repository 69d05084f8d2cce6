"""Bulk loading of delimited text into the store.

``inspect`` recognizes the structure of a source: it detects the delimiter,
ranks candidate classes from the header pattern (with the first data rows as
value samples), and proposes a column mapping to the best class. ``run_import``
commits a mapping row by row under full controlled-input checking; each data
row either becomes exactly one object or is rejected with a reason, so
``inserted + rejected`` always equals the source's data-row count.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import (
    DanglingLink,
    DuplicateKey,
    EmptySource,
    EngineError,
    InvalidMapping,
    KindMismatch,
    MissingRequired,
    NoCandidateClass,
    NoHeaderRow,
    UnknownAttribute,
)
from .recognition import ClassMatch, Perception, classify
from .store import Store
from .values import parse_text
from .vocabulary import ClassDef, Vocabulary, normalize_name

DELIMITERS = (",", ";", "\t")
SAMPLE_ROWS = 5

BY_LABEL = "by_label"
BY_ID = "by_id"
REJECT_ROW = "reject_row"
CREATE_STUB = "create_stub"


@dataclass(frozen=True)
class ImportMapping:
    """How source columns feed one class.

    ``link_resolution`` chooses per link attribute between matching the
    target class's label (``by_label``) and parsing an integer id (``by_id``);
    unmapped link attributes default to ``by_label``. ``unresolved_policy``
    decides what happens when a label finds no target: reject the row, or
    create a stub object carrying only the label.
    """

    class_name: str
    column_map: Mapping[str, str]
    link_resolution: Mapping[str, str] = field(default_factory=dict)
    unresolved_policy: str = REJECT_ROW

    def __post_init__(self) -> None:
        object.__setattr__(self, "column_map", dict(self.column_map))
        object.__setattr__(self, "link_resolution", dict(self.link_resolution))


@dataclass(frozen=True)
class RowError:
    row: int
    code: str
    message: str


@dataclass
class ImportReport:
    inserted: int = 0
    rejected: list[RowError] = field(default_factory=list)
    stubs_created: int = 0

    def to_payload(self) -> dict[str, Any]:
        return {
            "inserted": self.inserted,
            "rejected": [{"row": e.row, "code": e.code, "message": e.message} for e in self.rejected],
            "stubs_created": self.stubs_created,
        }


@dataclass(frozen=True)
class InspectResult:
    headers: tuple[str, ...]
    delimiter: str
    matches: tuple[ClassMatch, ...]
    mapping: ImportMapping


def sniff_delimiter(text: str) -> str:
    """Pick the delimiter (comma, semicolon, or tab) whose parse gives the
    most consistent and widest field counts."""
    best, best_score = DELIMITERS[0], (-1.0, 0)
    for delimiter in DELIMITERS:
        rows = [r for r in csv.reader(io.StringIO(text), delimiter=delimiter) if r]
        if not rows:
            continue
        counts = [len(r) for r in rows]
        modal = max(set(counts), key=lambda c: (counts.count(c), c))
        score = (counts.count(modal) / len(counts), modal)
        if score > best_score:
            best, best_score = delimiter, score
    return best


def parse_delimited(text: str) -> tuple[str, list[str], list[list[str]]]:
    """Split a source into (delimiter, header row, data rows).

    Rows whose cells are all blank do not count as data rows.
    """
    delimiter = sniff_delimiter(text)
    rows = [r for r in csv.reader(io.StringIO(text), delimiter=delimiter) if r]
    if not rows:
        raise EmptySource("source contains no rows")
    headers = rows[0]
    if any(not h.strip() for h in headers):
        raise NoHeaderRow("first row does not name every column")
    data = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    return delimiter, headers, data


def inspect(vocabulary: Vocabulary, text: str, store: Store | None = None) -> InspectResult:
    """Recognize a source's structure and propose a mapping to the best class.

    The proposal pairs columns with attributes by normalized-name equality
    only; anything else is left for the user to map explicitly.
    """
    delimiter, headers, data = parse_delimited(text)

    samples: dict[str, list[str]] = {}
    for row in data[:SAMPLE_ROWS]:
        for i, header in enumerate(headers):
            cell = row[i] if i < len(row) else ""
            if cell.strip():
                samples.setdefault(header, []).append(cell)
    perception = Perception(frozenset(headers), {k: tuple(v) for k, v in samples.items()})
    matches = classify(vocabulary, perception, store)
    if not matches:
        raise NoCandidateClass("no class matches any source column")

    top = vocabulary.require_class(matches[0].class_name)
    column_map: dict[str, str] = {}
    for header in headers:
        for attr in top.attributes:
            if normalize_name(header) == normalize_name(attr.name) and attr.name not in column_map.values():
                column_map[header] = attr.name
                break
    link_resolution = {}
    for header, attr_name in column_map.items():
        attr = top.attribute(attr_name)
        if attr.is_link:
            cells = samples.get(header, [])
            link_resolution[attr_name] = BY_ID if cells and _all_ints(cells) else BY_LABEL
    mapping = ImportMapping(top.name, column_map, link_resolution, REJECT_ROW)
    return InspectResult(tuple(headers), delimiter, tuple(matches), mapping)


def run_import(store: Store, mapping: ImportMapping, text: str) -> ImportReport:
    """Commit a source according to a mapping.

    Rows are processed in order; a failing row is recorded and never partially
    inserted. Stub targets are created only after the rest of the row has
    passed validation.
    """
    cls = _validate_mapping(store.vocabulary, mapping)
    _, headers, data = parse_delimited(text)
    unknown_columns = sorted(set(mapping.column_map) - set(headers))
    if unknown_columns:
        raise InvalidMapping(f"source has no column(s) {unknown_columns}")
    column_index = {h: i for i, h in enumerate(headers)}

    report = ImportReport()
    for row_number, row in enumerate(data, start=1):
        try:
            values, stubs = _prepare_row(store, cls, mapping, row, column_index)
        except EngineError as exc:
            report.rejected.append(RowError(row_number, exc.code, exc.message))
            continue
        for attr_name, target_class, label_text in stubs:
            target = store.vocabulary.require_class(target_class)
            stub_id = store.insert(target_class, {target.label_attribute: label_text})
            values[attr_name] = stub_id
            report.stubs_created += 1
        try:
            store.insert(cls.name, values)
        except EngineError as exc:
            report.rejected.append(RowError(row_number, exc.code, exc.message))
            continue
        report.inserted += 1
    return report


def _validate_mapping(vocabulary: Vocabulary, mapping: ImportMapping) -> ClassDef:
    cls = vocabulary.require_class(mapping.class_name)
    mapped_attrs: set[str] = set()
    for column, attr_name in mapping.column_map.items():
        attr = cls.attribute(attr_name)
        if attr is None:
            raise UnknownAttribute(f"{cls.name!r} has no attribute {attr_name!r}")
        if attr_name in mapped_attrs:
            raise InvalidMapping(f"attribute {attr_name!r} mapped from more than one column")
        mapped_attrs.add(attr_name)
    for attr in cls.required_attributes():
        if attr.name in mapped_attrs:
            continue
        if cls.is_intermediate and attr.name == cls.label_attribute:
            continue  # derived from the linked objects' labels
        raise MissingRequired(f"required attribute {attr.name!r} is not mapped")
    for attr_name, mode in mapping.link_resolution.items():
        attr = cls.attribute(attr_name)
        if attr is None or not attr.is_link:
            raise InvalidMapping(f"{attr_name!r} is not a link attribute of {cls.name!r}")
        if mode not in (BY_LABEL, BY_ID):
            raise InvalidMapping(f"unknown link resolution {mode!r}")
    if mapping.unresolved_policy not in (REJECT_ROW, CREATE_STUB):
        raise InvalidMapping(f"unknown unresolved policy {mapping.unresolved_policy!r}")
    return cls


def _prepare_row(
    store: Store,
    cls: ClassDef,
    mapping: ImportMapping,
    row: list[str],
    column_index: Mapping[str, int],
) -> tuple[dict[str, Any], list[tuple[str, str, str]]]:
    """Parse and validate one row. Returns the insertable values plus the
    stubs still to create; raises a domain error to reject the row."""
    values: dict[str, Any] = {}
    stubs: list[tuple[str, str, str]] = []

    for column, attr_name in mapping.column_map.items():
        index = column_index[column]
        raw = row[index] if index < len(row) else ""
        if not raw.strip():
            continue
        attr = cls.attribute(attr_name)
        if attr.is_link:
            mode = mapping.link_resolution.get(attr_name, BY_LABEL)
            if mode == BY_ID:
                try:
                    target_id = int(raw.strip())
                except ValueError:
                    raise KindMismatch(f"{attr_name}: {raw!r} is not an integer id") from None
                if target_id not in store or store.get(target_id).class_name != attr.target_class:
                    raise DanglingLink(f"{attr_name}: no {attr.target_class!r} object with id {raw.strip()}")
                values[attr_name] = target_id
            else:
                resolved = _resolve_label(store, attr.target_class, raw.strip())
                if resolved is not None:
                    values[attr_name] = resolved
                elif mapping.unresolved_policy == CREATE_STUB and _stub_allowed(store.vocabulary, attr.target_class):
                    stubs.append((attr_name, attr.target_class, raw.strip()))
                elif mapping.unresolved_policy == CREATE_STUB:
                    raise DanglingLink(
                        f"{attr_name}: no {attr.target_class!r} labeled {raw.strip()!r}; "
                        "stub refused, target class has required attributes beyond its label"
                    )
                else:
                    raise DanglingLink(f"{attr_name}: no {attr.target_class!r} labeled {raw.strip()!r}")
        else:
            try:
                values[attr_name] = parse_text(attr.kind, raw)
            except ValueError as exc:
                raise KindMismatch(f"{attr_name}: {exc}") from None

    populated = set(values) | {attr_name for attr_name, _, _ in stubs}
    for attr in cls.required_attributes():
        if attr.name in populated:
            continue
        if cls.is_intermediate and attr.name == cls.label_attribute:
            continue
        raise MissingRequired(f"{cls.name!r}.{attr.name} is required")

    # store.insert re-checks key uniqueness; checking before stub creation
    # keeps stub accounting clean for rows that would be rejected anyway.
    # A row that needs a stub cannot collide: its key contains a fresh id.
    if not stubs and cls.is_intermediate and cls.key_unique and cls.key_attributes():
        key = tuple(values.get(a.name) for a in cls.key_attributes())
        for record in store.objects_of(cls.name):
            if tuple(record.values.get(a.name) for a in cls.key_attributes()) == key:
                raise DuplicateKey(f"key {key} already taken by object {record.id} in class {cls.name!r}")
    return values, stubs


def _resolve_label(store: Store, class_name: str, label_text: str) -> int | None:
    for record in store.objects_of(class_name):
        if store.label(record.id) == label_text:
            return record.id
    return None


def _stub_allowed(vocabulary: Vocabulary, class_name: str) -> bool:
    cls = vocabulary.require_class(class_name)
    if cls.label_attribute is None:
        return False
    return all(a.name == cls.label_attribute for a in cls.required_attributes())


def _all_ints(cells: list[str]) -> bool:
    for cell in cells:
        try:
            int(cell.strip())
        except ValueError:
            return False
    return True
