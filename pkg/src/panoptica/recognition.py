"""Recognizing which class an observed object most plausibly belongs to.

Given the attribute names perceived on an unknown object (and optionally some
sample values), every class in the vocabulary is scored by how well its
attribute set matches the perceived pattern. Names are compared after
normalization (lowercase, trimmed, whitespace runs collapsed to ``_``), so
"Opera Work" matches "opera_work".

The score blends two exact rationals:

    score = 4/5 * jaccard(perceived, class_attributes)
          + 1/5 * fraction of matched attributes whose samples all parse
                  as the declared kind (vacuously 1 without samples)

Classes scoring zero are omitted; ties break toward fewer missing required
attributes, then vocabulary declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import EmptyPerception
from .store import Store
from .values import Kind, parse_text
from .vocabulary import Vocabulary, normalize_name

NAME_WEIGHT = Fraction(4, 5)
VALUE_WEIGHT = Fraction(1, 5)


@dataclass(frozen=True)
class Perception:
    """Observed attribute names plus optional per-attribute sample values."""

    attribute_names: frozenset[str]
    samples: Mapping[str, tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if not isinstance(self.attribute_names, frozenset):
            object.__setattr__(self, "attribute_names", frozenset(self.attribute_names))
        if not self.attribute_names:
            raise EmptyPerception("a perception needs at least one attribute name")
        samples = {k: tuple(v) for k, v in (self.samples or {}).items()}
        for name, values in samples.items():
            if not values:
                raise EmptyPerception(f"sample list for {name!r} is empty")
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class ClassMatch:
    """How well one class matches a perception. Sets hold normalized names."""

    class_name: str
    score: Fraction
    matched: frozenset[str]
    missing_required: frozenset[str]
    value_compat: Fraction


def classify(vocabulary: Vocabulary, perception: Perception, store: Store | None = None) -> list[ClassMatch]:
    """Rank candidate classes for a perception, best first.

    When a store is given, a sample is also compatible with a link attribute
    if it equals the label of some object of the target class; without one,
    link samples must parse as integer ids.
    """
    if not perception.attribute_names:
        raise EmptyPerception("a perception needs at least one attribute name")

    perceived = {normalize_name(n) for n in perception.attribute_names}
    samples: dict[str, list[str]] = {}
    for name, values in perception.samples.items():
        samples.setdefault(normalize_name(name), []).extend(values)

    matches: list[tuple[Fraction, int, int, ClassMatch]] = []
    for index, cls in enumerate(vocabulary.classes):
        class_names = {normalize_name(a.name): a for a in cls.attributes}
        matched = perceived & set(class_names)
        missing_required = frozenset(
            normalize_name(a.name) for a in cls.required_attributes()
        ) - matched
        if not matched:
            continue
        name_score = Fraction(len(matched), len(perceived | set(class_names)))
        compatible = sum(
            1
            for name in matched
            if _samples_compatible(class_names[name], samples.get(name, []), store)
        )
        value_compat = Fraction(compatible, len(matched))
        score = NAME_WEIGHT * name_score + VALUE_WEIGHT * value_compat
        match = ClassMatch(cls.name, score, frozenset(matched), missing_required, value_compat)
        matches.append((-score, len(missing_required), index, match))

    matches.sort(key=lambda item: item[:3])
    return [item[3] for item in matches]


def match_report(match: ClassMatch) -> str:
    """One-line human-readable summary of a match."""
    matched = ",".join(sorted(match.matched))
    missing = ",".join(sorted(match.missing_required))
    return (
        f"{match.class_name} score={float(match.score):.3f} "
        f"matched=[{matched}] missing_required=[{missing}]"
    )


def _samples_compatible(attr, samples: Sequence[str], store: Store | None) -> bool:
    for sample in samples:
        if attr.kind is Kind.LINK:
            if not _link_sample_ok(attr.target_class, sample, store):
                return False
        else:
            try:
                parse_text(attr.kind, sample)
            except ValueError:
                return False
    return True


def _link_sample_ok(target_class: str, sample: str, store: Store | None) -> bool:
    try:
        int(sample.strip())
        return True
    except ValueError:
        pass
    if store is None or store.vocabulary.class_def(target_class) is None:
        return False
    text = sample.strip()
    return any(store.label(r.id) == text for r in store.objects_of(target_class))
