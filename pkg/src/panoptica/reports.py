"""Deterministic report and export documents.

Object reports render exactly the viewing-window content (focus attributes,
dependent-object groups and their scalar values) with no filters or anchors
applied; list reports render a filtered class as rows. Exports serialize the
whole store: ``sql`` emits the compiled DDL followed by INSERT statements in
id order, ``xml`` a single document embedding the vocabulary and every object.
All outputs are pure functions of their inputs — byte-identical on repeat.
"""

from __future__ import annotations

import csv
import html
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Any, Sequence

from .errors import CorruptStore, UnknownAttribute, UnsupportedFormat
from .store import ObjectId, Store
from .traversal import Filter, Navigator, Session, ViewModel, validate_filter
from .values import Kind, from_wire, render, sql_literal, to_wire
from .vocabulary import Vocabulary, column_name, compile_ddl, from_document, to_document

OBJECT_FORMATS = ("txt", "html", "xml")
LIST_FORMATS = ("txt", "csv", "html", "xml")
EXPORT_FORMATS = ("sql", "xml")

XML_DECLARATION = '<?xml version="1.0" encoding="UTF-8"?>\n'


@dataclass(frozen=True)
class ReportSpec:
    """A report request: one focused object with its context, or a filtered
    object list. ``csv`` is meaningful only for lists."""

    kind: str  # object_report | list_report
    format: str
    object_id: ObjectId | None = None
    class_name: str | None = None
    filter: Filter | None = None
    columns: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "object_report":
            if self.format not in OBJECT_FORMATS:
                raise UnsupportedFormat(f"object reports support {OBJECT_FORMATS}, not {self.format!r}")
            if self.object_id is None:
                raise ValueError("object_report needs an object_id")
        elif self.kind == "list_report":
            if self.format not in LIST_FORMATS:
                raise UnsupportedFormat(f"list reports support {LIST_FORMATS}, not {self.format!r}")
            if self.class_name is None:
                raise ValueError("list_report needs a class_name")
        else:
            raise ValueError(f"unknown report kind {self.kind!r}")

    def render(self, store: Store) -> str:
        if self.kind == "object_report":
            return object_report(store, self.object_id, self.format)
        return list_report(store, self.class_name, self.filter, list(self.columns), self.format)


# --- object reports ---------------------------------------------------------


def object_report(store: Store, object_id: ObjectId, fmt: str = "txt") -> str:
    """Render one object with its full context (no filters, no anchors)."""
    if fmt not in OBJECT_FORMATS:
        raise UnsupportedFormat(f"object reports support {OBJECT_FORMATS}, not {fmt!r}")
    view = Navigator(store, Session()).focus(object_id)
    if fmt == "txt":
        return _object_txt(view)
    if fmt == "html":
        return _object_html(view)
    return _object_xml(store, view)


def _object_txt(view: ViewModel) -> str:
    lines = [view.focus.label, f"class: {view.focus_class}", f"id: {view.focus.id}", ""]
    lines.append("attributes:")
    for entry in view.d3_attributes:
        if entry.is_link and entry.target_id is not None:
            lines.append(
                f"  {entry.attribute}: {entry.target_label} -> {entry.target_class} #{entry.target_id}"
            )
        else:
            lines.append(f"  {entry.attribute}: {entry.value}")
    lines.append("")
    lines.append("context:")
    if not view.d4_context:
        lines.append("  (none)")
    for group, values in zip(view.d4_context, view.d5_group_attributes):
        lines.append(f"  {group.class_name} (via {group.attribute}):")
        for member, member_values in zip(group.members, values.members):
            scalars = ", ".join(f"{k}: {v}" for k, v in member_values.values.items() if v != "")
            suffix = f"  [{scalars}]" if scalars else ""
            lines.append(f"    - {member.label}{suffix}")
    return "\n".join(lines) + "\n"


def _object_html(view: ViewModel) -> str:
    esc = html.escape
    parts = [
        "<!DOCTYPE html>",
        "<html>",
        f'<head><meta charset="utf-8"><title>{esc(view.focus.label)}</title></head>',
        "<body>",
        f"<h1>{esc(view.focus.label)}</h1>",
        f'<p class="object-meta">{esc(view.focus_class)} #{view.focus.id}</p>',
        '<table class="attributes">',
    ]
    for entry in view.d3_attributes:
        if entry.is_link and entry.target_id is not None:
            value = (
                f'<a class="link" href="#object-{entry.target_id}"><u>{esc(entry.target_label)}</u></a>'
            )
        else:
            value = esc(entry.value)
        parts.append(f"<tr><th>{esc(entry.attribute)}</th><td>{value}</td></tr>")
    parts.append("</table>")
    for group, values in zip(view.d4_context, view.d5_group_attributes):
        parts.append(f"<h2>{esc(group.class_name)} (via {esc(group.attribute)})</h2>")
        parts.append('<ul class="context-group">')
        for member, member_values in zip(group.members, values.members):
            scalars = ", ".join(f"{esc(k)}: {esc(v)}" for k, v in member_values.values.items() if v != "")
            detail = f' <span class="values">{scalars}</span>' if scalars else ""
            parts.append(
                f'<li><a class="link" href="#object-{member.id}"><u>{esc(member.label)}</u></a>{detail}</li>'
            )
        parts.append("</ul>")
    parts.extend(["</body>", "</html>"])
    return "\n".join(parts) + "\n"


def _object_xml(store: Store, view: ViewModel) -> str:
    root = ET.Element(
        "object",
        {"id": str(view.focus.id), "class": view.focus_class, "label": view.focus.label},
    )
    record = store.get(view.focus.id)
    _append_values(root, store, record.class_name, record.values)
    context = ET.SubElement(root, "context")
    for group in view.d4_context:
        for member in group.members:
            member_record = store.get(member.id)
            node = ET.SubElement(
                context,
                "object",
                {
                    "id": str(member.id),
                    "class": group.class_name,
                    "via": group.attribute,
                    "label": member.label,
                },
            )
            _append_values(node, store, group.class_name, member_record.values)
    return _serialize_xml(root)


def _append_values(node: ET.Element, store: Store, class_name: str, values: dict[str, Any]) -> None:
    cls = store.vocabulary.require_class(class_name)
    for attr in cls.attributes:
        value = values.get(attr.name)
        if value is None:
            continue
        element = ET.SubElement(node, "value", {"attribute": attr.name, "kind": attr.kind.value})
        if attr.is_link:
            element.set("target_id", str(value))
            element.text = store.label(value)
        else:
            element.text = render(attr.kind, value)


# --- list reports --------------------------------------------------------------


def list_report(
    store: Store,
    class_name: str,
    flt: Filter | None,
    columns: Sequence[str],
    fmt: str = "txt",
) -> str:
    """Render the objects of a class passing a filter, ordered (label, id).

    ``columns`` defaults to every attribute of the class; link columns render
    the target object's label.
    """
    if fmt not in LIST_FORMATS:
        raise UnsupportedFormat(f"list reports support {LIST_FORMATS}, not {fmt!r}")
    cls = store.vocabulary.require_class(class_name)
    columns = list(columns) if columns else [a.name for a in cls.attributes]
    for column in columns:
        if cls.attribute(column) is None:
            raise UnknownAttribute(f"{class_name!r} has no attribute {column!r}")
    navigator = Navigator(store, Session())
    if flt is not None:
        navigator.set_filter(flt)
    visible = navigator.select_class(class_name)

    rows: list[list[str]] = []
    for entry in visible:
        record = store.get(entry.id)
        row = []
        for column in columns:
            attr = cls.attribute(column)
            value = record.values.get(column)
            if attr.is_link and value is not None:
                row.append(store.label(value))
            else:
                row.append(render(attr.kind, value))
        rows.append(row)

    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
        return buffer.getvalue()
    if fmt == "txt":
        header = " | ".join(columns)
        lines = [f"{class_name}: {len(rows)} object(s)", header, "-" * len(header)]
        lines.extend(" | ".join(row) for row in rows)
        return "\n".join(lines) + "\n"
    if fmt == "html":
        esc = html.escape
        parts = [
            "<!DOCTYPE html>",
            "<html>",
            f'<head><meta charset="utf-8"><title>{esc(class_name)}</title></head>',
            "<body>",
            f"<h1>{esc(class_name)}</h1>",
            '<table class="object-list">',
            "<tr>" + "".join(f"<th>{esc(c)}</th>" for c in columns) + "</tr>",
        ]
        for row in rows:
            parts.append("<tr>" + "".join(f"<td>{esc(cell)}</td>" for cell in row) + "</tr>")
        parts.extend(["</table>", "</body>", "</html>"])
        return "\n".join(parts) + "\n"

    root = ET.Element("objects", {"class": class_name})
    for entry in visible:
        record = store.get(entry.id)
        node = ET.SubElement(
            root, "object", {"id": str(record.id), "class": class_name, "label": entry.label}
        )
        for column in columns:
            attr = cls.attribute(column)
            value = record.values.get(column)
            if value is None:
                continue
            element = ET.SubElement(node, "value", {"attribute": column, "kind": attr.kind.value})
            if attr.is_link:
                element.set("target_id", str(value))
                element.text = store.label(value)
            else:
                element.text = render(attr.kind, value)
    return _serialize_xml(root)


# --- whole-store export ------------------------------------------------------------


def export_store(store: Store, vocabulary: Vocabulary | None = None, fmt: str = "sql") -> str:
    """Serialize the vocabulary and every object.

    ``sql``: the compiled DDL followed by one INSERT per object in id order,
    link values emitted as integer foreign keys. ``xml``: a single document
    embedding the vocabulary and all objects (lossless; see
    :func:`load_xml_export`).
    """
    vocabulary = vocabulary if vocabulary is not None else store.vocabulary
    if fmt not in EXPORT_FORMATS:
        raise UnsupportedFormat(f"exports support {EXPORT_FORMATS}, not {fmt!r}")
    violations = store.integrity_check()
    if violations:
        raise CorruptStore("; ".join(str(v) for v in violations[:5]))
    if fmt == "sql":
        return _export_sql(store, vocabulary)
    return _export_xml(store, vocabulary)


def _export_sql(store: Store, vocabulary: Vocabulary) -> str:
    parts = [compile_ddl(vocabulary), "-- data\n"]
    statements = []
    for record in store.records():
        cls = vocabulary.require_class(record.class_name)
        columns = ['"id"'] + [f'"{column_name(a)}"' for a in cls.attributes]
        literals = [str(record.id)]
        for attr in cls.attributes:
            literals.append(sql_literal(attr.kind, record.values.get(attr.name)))
        statements.append(
            f'INSERT INTO "{cls.name}" ({", ".join(columns)}) VALUES ({", ".join(literals)});'
        )
    return parts[0] + "\n" + parts[1] + "\n".join(statements) + ("\n" if statements else "")


def _export_xml(store: Store, vocabulary: Vocabulary) -> str:
    root = ET.Element("export", {"next_id": str(store.next_id)})
    vocab_node = ET.SubElement(
        root, "vocabulary", {"name": vocabulary.name, "version": str(vocabulary.version)}
    )
    for cls in vocabulary.classes:
        class_node = ET.SubElement(
            vocab_node,
            "class",
            {
                "name": cls.name,
                "is_intermediate": _xml_bool(cls.is_intermediate),
                "label_attribute": cls.label_attribute or "",
                "key_unique": _xml_bool(cls.key_unique),
            },
        )
        for attr in cls.attributes:
            attr_el = ET.SubElement(
                class_node,
                "attribute",
                {"name": attr.name, "kind": attr.kind.value, "required": _xml_bool(attr.required)},
            )
            if attr.is_link:
                attr_el.set("target_class", attr.target_class)
    objects_node = ET.SubElement(root, "objects")
    for record in store.records():
        cls = vocabulary.require_class(record.class_name)
        node = ET.SubElement(objects_node, "object", {"id": str(record.id), "class": record.class_name})
        for attr in cls.attributes:
            value = record.values.get(attr.name)
            if value is None:
                continue
            element = ET.SubElement(node, "value", {"attribute": attr.name, "kind": attr.kind.value})
            if attr.kind is Kind.BOOLEAN:
                element.text = _xml_bool(value)
            else:
                element.text = str(to_wire(attr.kind, value))
    return _serialize_xml(root)


def load_xml_export(text: str) -> tuple[Vocabulary, Store]:
    """Reconstruct (vocabulary, store) from an xml export.

    Re-exporting the result reproduces the input byte for byte. Corrupt
    documents (unparseable, or failing the integrity check) are refused.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise CorruptStore(f"unparseable xml export: {exc}") from exc
    if root.tag != "export":
        raise CorruptStore(f"expected <export> root, got <{root.tag}>")
    vocab_node = root.find("vocabulary")
    if vocab_node is None:
        raise CorruptStore("export lacks a <vocabulary> element")

    classes = []
    for class_node in vocab_node.findall("class"):
        attributes = []
        for attr_el in class_node.findall("attribute"):
            doc = {
                "name": attr_el.get("name"),
                "kind": attr_el.get("kind"),
                "required": attr_el.get("required") == "true",
            }
            if attr_el.get("target_class") is not None:
                doc["target_class"] = attr_el.get("target_class")
            attributes.append(doc)
        classes.append(
            {
                "name": class_node.get("name"),
                "is_intermediate": class_node.get("is_intermediate") == "true",
                "label_attribute": class_node.get("label_attribute") or None,
                "key_unique": class_node.get("key_unique") == "true",
                "attributes": attributes,
            }
        )
    vocabulary = from_document(
        {
            "name": vocab_node.get("name"),
            "version": int(vocab_node.get("version", "0")),
            "classes": classes,
        }
    )

    objects = []
    objects_node = root.find("objects")
    for node in [] if objects_node is None else objects_node.findall("object"):
        class_name = node.get("class")
        cls = vocabulary.class_def(class_name)
        values: dict[str, Any] = {}
        for element in node.findall("value"):
            attr_name = element.get("attribute")
            attr = cls.attribute(attr_name) if cls else None
            raw = element.text or ""
            if attr is None:
                values[attr_name] = raw
            elif attr.kind in (Kind.INTEGER, Kind.LINK):
                values[attr_name] = int(raw)
            elif attr.kind is Kind.BOOLEAN:
                values[attr_name] = raw == "true"
            else:
                values[attr_name] = from_wire(attr.kind, raw)
        objects.append({"id": int(node.get("id")), "class": class_name, "values": values})

    snapshot = {
        "vocabulary_version": vocabulary.version,
        "next_id": int(root.get("next_id", "1")),
        "objects": objects,
    }
    return vocabulary, Store.from_snapshot(snapshot, vocabulary)


def vocabulary_document(vocabulary: Vocabulary) -> dict[str, Any]:
    """Convenience re-export used by the gateway."""
    return to_document(vocabulary)


def _xml_bool(value: bool) -> str:
    return "true" if value else "false"


def _serialize_xml(root: ET.Element) -> str:
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    serialized = ET.tostring(root, encoding="unicode")
    # XML parsers normalize a literal CR away; escape it so text values
    # survive an export -> load -> export round trip byte-identically.
    # (The serializer already escapes CR inside attribute values.)
    serialized = serialized.replace("\r", "&#13;")
    return XML_DECLARATION + serialized + "\n"
