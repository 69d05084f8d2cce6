"""Focus+context navigation over the object store.

A :class:`Navigator` owns one :class:`Session` (selected class, focus,
filters, anchors, visit history) and computes :class:`ViewModel` values, the
five-dimension rendering of the information space around the focused object:

  d1  classes with visible-object counts
  d2  objects of the selected class
  d3  the focus's attributes (link values resolve to live targets)
  d4  dependent objects pointing at the focus, grouped by (class, attribute)
  d5  the scalar attribute values of every d4 member

Filters and anchors restrict d1 counts, d2, and d4 membership; the focus
itself (d3) is always shown in full. Every id placed in a view resolves to a
live object, so any displayed link can be followed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

from .errors import (
    KindMismatch,
    PredicateKindMismatch,
    ClassMismatch,
    StaleFocus,
    UnknownAttribute,
    UnknownObject,
    UnpopulatedLink,
)
from .store import ObjectId, ObjectRecord, Store
from .values import Kind, ORDERED_KINDS, check_value, render
from .vocabulary import ClassDef, Vocabulary


class Predicate(str, Enum):
    EQUALS = "equals"
    CONTAINS = "contains"
    RANGE = "range"
    IN_SET = "in_set"


@dataclass(frozen=True)
class Clause:
    """One attribute predicate. Which payload field applies depends on the
    predicate: ``value`` for equals/contains, ``low``/``high`` for range
    (either end may be open), ``ids`` for in_set."""

    attribute: str
    predicate: Predicate
    value: Any = None
    low: Any = None
    high: Any = None
    ids: frozenset[ObjectId] = frozenset()

    def __post_init__(self) -> None:
        if not isinstance(self.predicate, Predicate):
            object.__setattr__(self, "predicate", Predicate(self.predicate))
        if not isinstance(self.ids, frozenset):
            object.__setattr__(self, "ids", frozenset(self.ids))


@dataclass(frozen=True)
class Filter:
    """Per-class restriction: a conjunction of clauses."""

    class_name: str
    clauses: tuple[Clause, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.clauses, tuple):
            object.__setattr__(self, "clauses", tuple(self.clauses))


@dataclass
class Session:
    """Navigation state owned by one client."""

    selected_class: str | None = None
    focus: ObjectId | None = None
    filters: dict[str, Filter] = field(default_factory=dict)
    anchors: dict[str, ObjectId] = field(default_factory=dict)
    history: list[ObjectId] = field(default_factory=list)


@dataclass(frozen=True)
class ViewObject:
    id: ObjectId
    label: str


@dataclass(frozen=True)
class ViewAttribute:
    """One d3 entry. Links carry a resolvable target; the rendered value of a
    populated link is the target's label."""

    attribute: str
    value: str
    is_link: bool
    target_id: ObjectId | None = None
    target_class: str | None = None
    target_label: str | None = None


@dataclass(frozen=True)
class ViewGroup:
    class_name: str
    attribute: str
    members: tuple[ViewObject, ...]


@dataclass(frozen=True)
class MemberValues:
    id: ObjectId
    values: dict[str, str]


@dataclass(frozen=True)
class GroupValues:
    class_name: str
    attribute: str
    members: tuple[MemberValues, ...]


@dataclass(frozen=True)
class ViewModel:
    focus: ViewObject
    focus_class: str
    d1_classes: tuple[tuple[str, int], ...]
    d2_objects: tuple[ViewObject, ...]
    d3_attributes: tuple[ViewAttribute, ...]
    d4_context: tuple[ViewGroup, ...]
    d5_group_attributes: tuple[GroupValues, ...]

    def to_payload(self) -> dict[str, Any]:
        """Wire shape used by the HTTP gateway."""
        d3 = []
        for entry in self.d3_attributes:
            item: dict[str, Any] = {
                "attribute": entry.attribute,
                "value": entry.value,
                "is_link": entry.is_link,
            }
            if entry.target_id is not None:
                item["target_id"] = entry.target_id
                item["target_class"] = entry.target_class
                item["target_label"] = entry.target_label
            d3.append(item)
        return {
            "focus": {"id": self.focus.id, "class": self.focus_class, "label": self.focus.label},
            "d1": [{"class": name, "count": count} for name, count in self.d1_classes],
            "d2": [{"id": o.id, "label": o.label} for o in self.d2_objects],
            "d3": d3,
            "d4": [
                {
                    "class": g.class_name,
                    "attribute": g.attribute,
                    "members": [{"id": m.id, "label": m.label} for m in g.members],
                }
                for g in self.d4_context
            ],
            "d5": [
                {
                    "class": g.class_name,
                    "attribute": g.attribute,
                    "members": [{"id": m.id, "values": dict(m.values)} for m in g.members],
                }
                for g in self.d5_group_attributes
            ],
        }


def validate_filter(vocabulary: Vocabulary, flt: Filter) -> Filter:
    """Check a filter against the vocabulary and normalize clause payloads.

    range applies to integer/decimal/date attributes, in_set to links,
    contains to text; equals works on any attribute (links compare target
    ids). Returns the filter with clause values coerced to stored kinds.
    """
    cls = vocabulary.require_class(flt.class_name)
    normalized: list[Clause] = []
    for clause in flt.clauses:
        attr = cls.attribute(clause.attribute)
        if attr is None:
            raise UnknownAttribute(f"{cls.name!r} has no attribute {clause.attribute!r}")
        if clause.predicate is Predicate.CONTAINS:
            if attr.kind is not Kind.TEXT:
                raise PredicateKindMismatch(f"contains applies to text, not {attr.kind.value}")
            if not isinstance(clause.value, str):
                raise PredicateKindMismatch("contains needs a text argument")
            normalized.append(clause)
        elif clause.predicate is Predicate.RANGE:
            if attr.kind not in ORDERED_KINDS:
                raise PredicateKindMismatch(f"range applies to ordered kinds, not {attr.kind.value}")
            if clause.low is None and clause.high is None:
                raise PredicateKindMismatch("range needs at least one bound")
            low = _coerce(attr.kind, clause.low) if clause.low is not None else None
            high = _coerce(attr.kind, clause.high) if clause.high is not None else None
            normalized.append(replace(clause, low=low, high=high))
        elif clause.predicate is Predicate.IN_SET:
            if attr.kind is not Kind.LINK:
                raise PredicateKindMismatch(f"in_set applies to links, not {attr.kind.value}")
            normalized.append(clause)
        else:
            normalized.append(replace(clause, value=_coerce(attr.kind, clause.value)))
    return replace(flt, clauses=tuple(normalized))


def _coerce(kind: Kind, value: Any) -> Any:
    try:
        return check_value(kind, value)
    except ValueError as exc:
        raise PredicateKindMismatch(str(exc)) from None


class Navigator:
    """Session-scoped navigation over one store."""

    def __init__(self, store: Store, session: Session | None = None) -> None:
        self.store = store
        self.session = session if session is not None else Session()

    # --- selection windows -------------------------------------------------

    def list_classes(self) -> list[tuple[str, int]]:
        """All classes in declaration order with visible-object counts (d1)."""
        result = []
        for cls in self.store.vocabulary.classes:
            count = sum(1 for r in self.store.objects_of(cls.name) if self._visible(r))
            result.append((cls.name, count))
        return result

    def select_class(self, class_name: str) -> list[ViewObject]:
        """Select a class; returns its visible objects ordered (label, id) (d2)."""
        self.store.vocabulary.require_class(class_name)
        self.session.selected_class = class_name
        return self._visible_objects(class_name)

    # --- viewing window ------------------------------------------------------

    def focus(self, object_id: ObjectId) -> ViewModel:
        """Make an object the focus and return the full view around it."""
        record = self.store.get(object_id)
        self.session.focus = object_id
        self.session.history.append(object_id)
        return self._build_view(record)

    def view(self) -> ViewModel:
        """Recompute the view for the current focus (after filter or anchor
        changes). Raises UnknownObject when nothing is focused."""
        if self.session.focus is None:
            raise UnknownObject("no object is focused")
        return self._build_view(self.store.get(self.session.focus))

    def follow(self, from_id: ObjectId, target: str | ObjectId) -> ViewModel:
        """Traverse a displayed link: either a named link attribute of the
        focus, or the id of a member of a d4 group. Works in both directions;
        the destination becomes the new focus."""
        self.store.get(from_id)
        if from_id != self.session.focus:
            raise StaleFocus(f"object {from_id} is not the current focus")

        if isinstance(target, str):
            record = self.store.get(from_id)
            cls = self.store.vocabulary.require_class(record.class_name)
            attr = cls.attribute(target)
            if attr is None:
                raise UnknownAttribute(f"{cls.name!r} has no attribute {target!r}")
            if not attr.is_link:
                raise KindMismatch(f"{cls.name!r}.{target} is not a link attribute")
            destination = record.values.get(target)
            if destination is None:
                raise UnpopulatedLink(f"{cls.name!r}.{target} is not populated on object {from_id}")
            return self.focus(destination)

        view = self.view()
        for group in view.d4_context:
            if any(member.id == target for member in group.members):
                return self.focus(target)
        raise UnpopulatedLink(f"object {target} is not in the displayed context of {from_id}")

    # --- restrictions -----------------------------------------------------------

    def set_filter(self, flt: Filter) -> None:
        """Install (replace) the filter for a class. Affects d1 counts, d2,
        and d4 groups of that class; never d3."""
        self.session.filters[flt.class_name] = validate_filter(self.store.vocabulary, flt)

    def clear_filter(self, class_name: str) -> None:
        self.store.vocabulary.require_class(class_name)
        self.session.filters.pop(class_name, None)

    def set_anchor(self, class_name: str, object_id: ObjectId) -> None:
        """Pin a class to one object: collections of that class show only the
        anchored object and its direct neighbors (either link direction)."""
        self.store.vocabulary.require_class(class_name)
        record = self.store.get(object_id)
        if record.class_name != class_name:
            raise ClassMismatch(f"object {object_id} is {record.class_name!r}, not {class_name!r}")
        self.session.anchors[class_name] = object_id

    def clear_anchor(self, class_name: str) -> None:
        self.store.vocabulary.require_class(class_name)
        self.session.anchors.pop(class_name, None)

    # --- internals -----------------------------------------------------------------

    def _visible_objects(self, class_name: str) -> list[ViewObject]:
        return [
            ViewObject(r.id, self.store.label(r.id))
            for r in self.store.objects_of(class_name)
            if self._visible(r)
        ]

    def _visible(self, record: ObjectRecord) -> bool:
        return self._passes_filter(record) and self._passes_anchor(record)

    def _passes_filter(self, record: ObjectRecord) -> bool:
        flt = self.session.filters.get(record.class_name)
        if flt is None:
            return True
        cls = self.store.vocabulary.require_class(record.class_name)
        return all(self._clause_matches(cls, record, clause) for clause in flt.clauses)

    def _clause_matches(self, cls: ClassDef, record: ObjectRecord, clause: Clause) -> bool:
        attr = cls.attribute(clause.attribute)
        value = record.values.get(clause.attribute)
        if attr is None or value is None:
            return False
        if clause.predicate is Predicate.EQUALS:
            return value == clause.value
        if clause.predicate is Predicate.CONTAINS:
            return clause.value.lower() in value.lower()
        if clause.predicate is Predicate.RANGE:
            if clause.low is not None and value < clause.low:
                return False
            if clause.high is not None and value > clause.high:
                return False
            return True
        if clause.predicate is Predicate.IN_SET:
            return value in clause.ids
        return False

    def _passes_anchor(self, record: ObjectRecord) -> bool:
        anchor = self.session.anchors.get(record.class_name)
        if anchor is None:
            return True
        if anchor not in self.store:
            # The anchored object was deleted since; a dead anchor restricts
            # nothing rather than blanking the class.
            return True
        return record.id == anchor or record.id in self.store.neighbors(anchor)

    def _build_view(self, record: ObjectRecord) -> ViewModel:
        store = self.store
        cls = store.vocabulary.require_class(record.class_name)

        d1 = tuple(self.list_classes())
        d2 = tuple(self._visible_objects(self.session.selected_class)) if self.session.selected_class else ()

        d3 = []
        for attr in cls.attributes:
            value = record.values.get(attr.name)
            if attr.is_link and value is not None:
                target = store.get(value)
                d3.append(
                    ViewAttribute(
                        attribute=attr.name,
                        value=store.label(value),
                        is_link=True,
                        target_id=value,
                        target_class=target.class_name,
                        target_label=store.label(value),
                    )
                )
            else:
                d3.append(ViewAttribute(attr.name, render(attr.kind, value), attr.is_link))

        d4: list[ViewGroup] = []
        d5: list[GroupValues] = []
        for (group_class, via), member_ids in store.incoming(record.id).items():
            members = [store.get(i) for i in member_ids]
            visible = [m for m in members if self._visible(m)]
            if not visible:
                continue
            d4.append(
                ViewGroup(group_class, via, tuple(ViewObject(m.id, store.label(m.id)) for m in visible))
            )
            member_cls = store.vocabulary.require_class(group_class)
            d5.append(
                GroupValues(
                    group_class,
                    via,
                    tuple(
                        MemberValues(
                            m.id,
                            {
                                a.name: render(a.kind, m.values.get(a.name))
                                for a in member_cls.scalar_attributes()
                            },
                        )
                        for m in visible
                    ),
                )
            )

        return ViewModel(
            focus=ViewObject(record.id, store.label(record.id)),
            focus_class=record.class_name,
            d1_classes=d1,
            d2_objects=d2,
            d3_attributes=tuple(d3),
            d4_context=tuple(d4),
            d5_group_attributes=tuple(d5),
        )
