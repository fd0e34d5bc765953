"""Detection of value variants: token order, letter case, separator changes.

Two raw strings are variants when they normalize to the same key under a
policy: optional case folding, splitting on separator characters, token
sorting.  Proposals never mark anything by themselves; they return candidate
cells for the user to accept.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .errors import SchemaError, ValidationError
from .model import CellRef, Row, RowId, Table

DEFAULT_SEPARATORS = (" ", "\t", "\n", "\r", "/", "-", "_", ",", ".")
COMPARE_MODES = ("token_multiset", "token_set", "joined_sorted")


@dataclass(frozen=True)
class NormalizationPolicy:
    """How raw values map to comparison keys.

    ``token_multiset`` keeps duplicate tokens ('A A B' differs from 'A B'),
    ``token_set`` drops them, ``joined_sorted`` concatenates the sorted
    tokens without boundaries.  With no separators every value is a single
    token and only exact (case-folded) duplicates group.
    """

    case_fold: bool = True
    separators: tuple[str, ...] = DEFAULT_SEPARATORS
    compare_as: str = "token_multiset"

    def __post_init__(self) -> None:
        if self.compare_as not in COMPARE_MODES:
            raise ValidationError(f"unknown compare_as mode {self.compare_as!r}")
        if not self.separators and self.compare_as != "joined_sorted":
            raise ValidationError("separators may be empty only with compare_as=joined_sorted")

    def to_wire(self) -> dict:
        return {
            "case_fold": self.case_fold,
            "separators": list(self.separators),
            "compare_as": self.compare_as,
        }

    @classmethod
    def from_wire(cls, data: dict | None) -> NormalizationPolicy:
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise ValidationError("policy must be an object")
        unknown = set(data) - {"case_fold", "separators", "compare_as"}
        if unknown:
            raise ValidationError(f"unknown policy keys: {sorted(unknown)}")
        return cls(
            case_fold=bool(data.get("case_fold", True)),
            separators=tuple(data.get("separators", DEFAULT_SEPARATORS)),
            compare_as=data.get("compare_as", "token_multiset"),
        )


def normalize(value: str, policy: NormalizationPolicy | None = None) -> str:
    """Deterministic comparison key: case fold, split, sort, join."""
    policy = policy or NormalizationPolicy()
    text = value.casefold() if policy.case_fold else value
    if policy.separators:
        splitter = re.compile("[" + re.escape("".join(policy.separators)) + "]+")
        tokens = [t for t in splitter.split(text) if t]
    else:
        tokens = [text] if text else []
    tokens.sort()
    if policy.compare_as == "token_set":
        deduped = sorted(set(tokens))
        return " ".join(deduped)
    if policy.compare_as == "joined_sorted":
        return "".join(tokens)
    return " ".join(tokens)


@dataclass
class VariantGroup:
    """Distinct raw values of one attribute sharing a normalized key."""

    table: str
    attribute: str
    key: str
    members: list[dict] = field(default_factory=list)

    def total_occurrences(self) -> int:
        return sum(len(m["rows"]) for m in self.members)

    def to_wire(self) -> dict:
        return {
            "table": self.table,
            "attribute": self.attribute,
            "key": self.key,
            "members": self.members,
        }


def find_variant_groups(
    table: Table,
    attribute: str,
    policy: NormalizationPolicy | None = None,
    rows: Sequence[Row] | None = None,
) -> list[VariantGroup]:
    """Groups of >= 2 distinct non-NULL values sharing a key, most frequent first."""
    if not table.has_attribute(attribute):
        raise SchemaError(
            f"unknown attribute {attribute!r} in table {table.name!r}", detail={"attribute": attribute}
        )
    policy = policy or NormalizationPolicy()
    source = list(table.iter_rows()) if rows is None else list(rows)
    occurrences: dict[str, list[RowId]] = {}
    for row in source:
        value = row.values.get(attribute)
        if value is None:
            continue
        occurrences.setdefault(value, []).append(row.row_id)

    by_key: dict[str, list[str]] = {}
    for value in occurrences:
        by_key.setdefault(normalize(value, policy), []).append(value)

    groups: list[VariantGroup] = []
    for key, values in by_key.items():
        if len(values) < 2:
            continue
        members = [
            {"value": value, "rows": occurrences[value]}
            for value in sorted(values, key=lambda v: (-len(occurrences[v]), v))
        ]
        groups.append(VariantGroup(table=table.name, attribute=attribute, key=key, members=members))
    groups.sort(key=lambda g: (-g.total_occurrences(), g.key))
    return groups


def propose_marks(groups: Sequence[VariantGroup], strategy: str = "minority_members") -> set[CellRef]:
    """Candidate cells to mark.

    ``all_members``: every occurrence of every grouped value.
    ``minority_members``: every occurrence except the most frequent raw
    value per group (frequency ties keep the lexicographically smallest).
    """
    if strategy not in ("all_members", "minority_members"):
        raise ValidationError(f"unknown proposal strategy {strategy!r}")
    cells: set[CellRef] = set()
    for group in groups:
        keep: str | None = None
        if strategy == "minority_members":
            keep = min(
                (m["value"] for m in group.members),
                key=lambda v: (-_member_count(group, v), v),
            )
        for member in group.members:
            if member["value"] == keep:
                continue
            for row_id in member["rows"]:
                cells.add(CellRef(table=group.table, row_id=row_id, attribute=group.attribute))
    return cells


def _member_count(group: VariantGroup, value: str) -> int:
    for member in group.members:
        if member["value"] == value:
            return len(member["rows"])
    return 0
