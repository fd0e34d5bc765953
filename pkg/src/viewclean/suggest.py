"""Condition synthesis: rank conjunctive views that cover the marked rows.

Candidate atoms are exactly the (attribute, value) equalities that hold on
every marked row, so coverage is guaranteed at construction time rather
than filtered afterwards.  Ranking prefers views that show something beyond
the marks themselves (a view equal to the marked rows teaches nothing), a
browsable row count, fewer atoms, and conditions anchored on the attributes
the user actually marked.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import TYPE_CHECKING

from .errors import ValidationError
from .model import Row, Table, scan
from .views import ConditionAtom, ViewCondition

if TYPE_CHECKING:
    from .marking import MarkSet
    from .session import Session

ALLOWED_OPS = ("equals", "equals_ci")


@dataclass(frozen=True)
class SuggestionParams:
    """Knobs for the enumeration and the size window.

    ``min_rows`` defaults to one more than the number of marked rows, so a
    view that adds nothing to the marks falls outside the window.
    """

    max_atoms: int = 2
    min_rows: int | None = None
    max_rows: int = 200
    ops_allowed: tuple[str, ...] = ("equals",)

    def __post_init__(self) -> None:
        if self.max_atoms < 1:
            raise ValidationError("max_atoms must be >= 1")
        if self.min_rows is not None and self.min_rows > self.max_rows:
            raise ValidationError("min_rows must not exceed max_rows")
        for op in self.ops_allowed:
            if op not in ALLOWED_OPS:
                raise ValidationError(f"cannot synthesize atoms for op {op!r}")

    @classmethod
    def from_wire(cls, data: dict | None) -> SuggestionParams:
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise ValidationError("params must be an object")
        unknown = set(data) - {"max_atoms", "min_rows", "max_rows", "ops_allowed"}
        if unknown:
            raise ValidationError(f"unknown params keys: {sorted(unknown)}")
        return cls(
            max_atoms=int(data.get("max_atoms", 2)),
            min_rows=data.get("min_rows"),
            max_rows=int(data.get("max_rows", 200)),
            ops_allowed=tuple(data.get("ops_allowed", ("equals",))),
        )


@dataclass
class SuggestionCandidate:
    condition: ViewCondition
    row_count: int
    extra_rows: int
    covers_marked: bool = True

    def to_wire(self, rank: int) -> dict:
        return {
            "condition": self.condition.to_wire(),
            "rows": self.row_count,
            "extra": self.extra_rows,
            "atoms": len(self.condition.atoms),
            "rank": rank,
        }


def _marked_context(session: "Session", mark_set: "MarkSet") -> tuple[Table, list[Row], set[str]]:
    if not mark_set.cells:
        raise ValidationError("mark set is empty")
    tables = {cell.table for cell in mark_set.cells}
    if len(tables) != 1:
        raise ValidationError(
            "view suggestion needs marks within a single table",
            detail={"tables": sorted(tables)},
        )
    table = session.get_table(next(iter(tables)))
    row_ids = {cell.row_id for cell in mark_set.cells}
    rows = [table.rows[rid] for rid in table.sorted_ids() if rid in row_ids]
    marked_attributes = {cell.attribute for cell in mark_set.cells}
    return table, rows, marked_attributes


def candidate_atoms(session: "Session", mark_set: "str | MarkSet") -> list[ConditionAtom]:
    """Equality atoms that hold on every marked row, in canonical order."""
    resolved = session.get_mark_set(mark_set) if isinstance(mark_set, str) else mark_set
    table, marked_rows, _ = _marked_context(session, resolved)
    return _candidate_atoms_for_ops(table, marked_rows, ("equals",))


def _candidate_atoms_for_ops(
    table: Table, marked_rows: list[Row], ops_allowed: tuple[str, ...]
) -> list[ConditionAtom]:
    atoms: list[ConditionAtom] = []
    for attribute in table.attributes:
        raw = [row.values[attribute] for row in marked_rows]
        if any(v is None for v in raw):
            continue
        if "equals" in ops_allowed and len(set(raw)) == 1:
            atoms.append(ConditionAtom(attribute=attribute, op="equals", value=raw[0]))
        if "equals_ci" in ops_allowed and len({v.casefold() for v in raw}) == 1:
            atoms.append(ConditionAtom(attribute=attribute, op="equals_ci", value=raw[0].casefold()))
    return sorted(atoms)


def suggest_views(
    session: "Session",
    mark_set: "str | MarkSet",
    params: SuggestionParams | None = None,
) -> list[SuggestionCandidate]:
    """Ranked covering conjunctions of at most ``params.max_atoms`` atoms.

    Rank order: views showing at least one unmarked row before views that
    only repeat the marks (whenever any candidate has one); row counts
    inside the size window before outside; fewer atoms; row count closer
    to the window midpoint; more atoms on marked attributes; canonical
    condition text as the final tie-break.
    """
    params = params or SuggestionParams()
    resolved = session.get_mark_set(mark_set) if isinstance(mark_set, str) else mark_set
    table, marked_rows, marked_attributes = _marked_context(session, resolved)
    atoms = _candidate_atoms_for_ops(table, marked_rows, params.ops_allowed)
    if not atoms:
        return []

    marked_count = len(marked_rows)
    min_rows = params.min_rows if params.min_rows is not None else marked_count + 1
    midpoint = (min_rows + params.max_rows) / 2

    candidates: list[SuggestionCandidate] = []
    for size in range(1, min(params.max_atoms, len(atoms)) + 1):
        for combo in combinations(atoms, size):
            condition = ViewCondition.of(combo)
            if len(condition.atoms) != size:
                continue
            row_count = len(scan(table, condition))
            candidates.append(
                SuggestionCandidate(
                    condition=condition,
                    row_count=row_count,
                    extra_rows=row_count - marked_count,
                )
            )

    any_extra = any(c.extra_rows >= 1 for c in candidates)

    def rank_key(c: SuggestionCandidate):
        demoted = 1 if (any_extra and c.extra_rows == 0) else 0
        outside = 0 if min_rows <= c.row_count <= params.max_rows else 1
        marked_atom_count = sum(1 for a in c.condition.atoms if a.attribute in marked_attributes)
        return (
            demoted,
            outside,
            len(c.condition.atoms),
            abs(c.row_count - midpoint),
            -marked_atom_count,
            c.condition.text(),
        )

    candidates.sort(key=rank_key)
    return candidates
