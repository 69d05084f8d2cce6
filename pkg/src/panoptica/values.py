"""Attribute kinds and the value conversions every layer shares.

Stored values are normalized Python objects: ``str`` for text, ``int`` for
integers and link targets, ``decimal.Decimal`` for decimals, ``datetime.date``
for dates, ``bool`` for booleans. The helpers here convert between those and
the textual/JSON shapes used at the boundaries (imports, snapshots, reports,
SQL literals).
"""

from __future__ import annotations

import datetime
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Any

_TRUE_WORDS = {"true", "yes", "1"}
_FALSE_WORDS = {"false", "no", "0"}


class Kind(str, Enum):
    """The scalar kinds plus ``link`` (a pointer to another object)."""

    TEXT = "text"
    INTEGER = "integer"
    DECIMAL = "decimal"
    DATE = "date"
    BOOLEAN = "boolean"
    LINK = "link"


SCALAR_KINDS = frozenset(k for k in Kind if k is not Kind.LINK)
ORDERED_KINDS = frozenset({Kind.INTEGER, Kind.DECIMAL, Kind.DATE})


def check_value(kind: Kind, value: Any) -> Any:
    """Normalize ``value`` for storage under ``kind``.

    Lenient only where JSON forces it: dates may arrive as ISO strings and
    decimals as strings or floats. No cross-kind coercion ("42" is not an
    integer, 1 is not True). Raises ValueError on mismatch.
    """
    if kind is Kind.TEXT:
        if isinstance(value, str):
            return value
    elif kind is Kind.INTEGER:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif kind is Kind.DECIMAL:
        if isinstance(value, Decimal):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            return Decimal(value)
        if isinstance(value, float):
            return Decimal(str(value))
        if isinstance(value, str):
            try:
                return Decimal(value.strip())
            except InvalidOperation:
                raise ValueError(f"not a decimal: {value!r}") from None
    elif kind is Kind.DATE:
        if isinstance(value, datetime.datetime):
            raise ValueError("expected a calendar date, not a datetime")
        if isinstance(value, datetime.date):
            return value
        if isinstance(value, str):
            try:
                return datetime.date.fromisoformat(value.strip())
            except ValueError:
                raise ValueError(f"not an ISO date: {value!r}") from None
    elif kind is Kind.BOOLEAN:
        if isinstance(value, bool):
            return value
    elif kind is Kind.LINK:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    raise ValueError(f"expected {kind.value}, got {type(value).__name__}")


def parse_text(kind: Kind, raw: str) -> Any:
    """Parse one delimited-text cell into a stored value. Raises ValueError."""
    text = raw.strip()
    if kind is Kind.TEXT:
        return raw
    if kind is Kind.INTEGER:
        return int(text)
    if kind is Kind.DECIMAL:
        try:
            return Decimal(text)
        except InvalidOperation:
            raise ValueError(f"not a decimal: {raw!r}") from None
    if kind is Kind.DATE:
        return datetime.date.fromisoformat(text)
    if kind is Kind.BOOLEAN:
        lowered = text.lower()
        if lowered in _TRUE_WORDS:
            return True
        if lowered in _FALSE_WORDS:
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is Kind.LINK:
        return int(text)
    raise ValueError(f"unknown kind: {kind!r}")


def render(kind: Kind, value: Any) -> str:
    """Human-facing rendering for reports and CSV cells."""
    if value is None:
        return ""
    if kind is Kind.TEXT:
        return value
    if kind is Kind.DECIMAL:
        return format(value, "f")
    if kind is Kind.DATE:
        return value.isoformat()
    if kind is Kind.BOOLEAN:
        return "true" if value else "false"
    return str(value)


def to_wire(kind: Kind, value: Any) -> Any:
    """Stored value -> JSON/XML-safe value (exact, round-trippable)."""
    if value is None:
        return None
    if kind is Kind.DECIMAL:
        return str(value)
    if kind is Kind.DATE:
        return value.isoformat()
    return value


def from_wire(kind: Kind, value: Any) -> Any:
    """Inverse of :func:`to_wire`; leaves unparseable values untouched so a
    later integrity check can report them instead of aborting the load."""
    try:
        return check_value(kind, value)
    except ValueError:
        return value


def sql_literal(kind: Kind, value: Any) -> str:
    """ANSI-SQL literal for INSERT statements."""
    if value is None:
        return "NULL"
    if kind is Kind.TEXT:
        return "'" + value.replace("'", "''") + "'"
    if kind is Kind.DECIMAL:
        return format(value, "f")
    if kind is Kind.DATE:
        return f"'{value.isoformat()}'"
    if kind is Kind.BOOLEAN:
        return "TRUE" if value else "FALSE"
    return str(value)
