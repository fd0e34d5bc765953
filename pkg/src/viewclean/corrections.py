"""Value correction scoped to a view, with audit logging, undo and replay.

Every mutation appends an immutable AuditEntry carrying exact pre-images.
Undo never edits history: it appends a compensating entry and flags the
original as undone, and it refuses to run if any affected cell changed in
the meantime.  Batch corrections target the view's rows at execution time,
because views are virtual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import ConflictError, SchemaError, ScopeError, StateError
from .model import CellRef, CellValue, now_iso

if TYPE_CHECKING:
    from .session import Session
    from .views import ViewDef


@dataclass(frozen=True)
class CellChange:
    cell: CellRef
    old: CellValue
    new: CellValue

    def to_wire(self) -> dict:
        return {"row": self.cell.row_id, "attr": self.cell.attribute, "old": self.old, "new": self.new}


@dataclass
class AuditEntry:
    """One correction event; immutable once written (undo only flips the flag)."""

    id: int
    scope_view: str
    changes: list[CellChange]
    actor: str
    timestamp: str
    undone: bool = False
    undo_of: int | None = None
    touched_marks: list[dict] = field(default_factory=list)

    def to_wire(self) -> dict:
        return {
            "id": self.id,
            "view": self.scope_view,
            "actor": self.actor,
            "ts": self.timestamp,
            "changes": [c.to_wire() for c in self.changes],
            "undone": self.undone,
            "undo_of": self.undo_of,
        }


@dataclass(frozen=True)
class SubstitutionRule:
    """An observed old→new replacement for one attribute, with its evidence count."""

    attribute: str
    old: CellValue
    new: CellValue
    support: int

    def to_wire(self) -> dict:
        return {"attribute": self.attribute, "old": self.old, "new": self.new, "support": self.support}


def touched_marks_for(session: "Session", changes: list[CellChange], table: str) -> list[dict]:
    index = session.marked_cells_index(table)
    touched = []
    for change in changes:
        sets = index.get(change.cell)
        if sets:
            touched.append({"row": change.cell.row_id, "attr": change.cell.attribute, "sets": sorted(sets)})
    return touched


def correct_cell(
    session: "Session",
    view: "str | ViewDef",
    cell: CellRef,
    new_value: CellValue,
    actor: str,
) -> AuditEntry:
    """Set one cell through a view; the cell's row must be in the view now."""
    from .views import evaluate_view

    vdef = session.get_view(view) if isinstance(view, str) else view
    resolved = session.resolve_cell(cell)
    if resolved.table != vdef.table:
        raise ScopeError(
            f"cell table {resolved.table!r} does not match view table {vdef.table!r}",
            detail={"cell": resolved.to_wire(), "view": vdef.id},
        )
    in_view = {row.row_id for row in evaluate_view(session, vdef).rows}
    if resolved.row_id not in in_view:
        raise ScopeError(
            f"row {resolved.row_id!r} is not in view {vdef.id!r}",
            detail={"cell": resolved.to_wire(), "view": vdef.id},
        )
    old = session.get_table(resolved.table).rows[resolved.row_id].values[resolved.attribute]
    changes = [CellChange(cell=resolved, old=old, new=new_value)]
    return _commit(session, vdef, changes, actor)


def plan_values_correction(
    session: "Session",
    view: "str | ViewDef",
    attribute: str,
    old_value: CellValue,
    new_value: CellValue,
) -> list[CellChange]:
    """Changes a batch correction would apply right now (preview = this, uncommitted)."""
    from .views import evaluate_view

    vdef = session.get_view(view) if isinstance(view, str) else view
    table = session.get_table(vdef.table)
    if not table.has_attribute(attribute):
        raise SchemaError(f"unknown attribute {attribute!r} in table {table.name!r}")
    changes = []
    for row in evaluate_view(session, vdef).rows:
        if row.values[attribute] == old_value:
            changes.append(
                CellChange(
                    cell=CellRef(table=vdef.table, row_id=row.row_id, attribute=attribute),
                    old=old_value,
                    new=new_value,
                )
            )
    return changes


def correct_values(
    session: "Session",
    view: "str | ViewDef",
    attribute: str,
    old_value: CellValue,
    new_value: CellValue,
    actor: str,
) -> AuditEntry:
    """Replace every ``old_value`` in ``attribute`` across the view's current rows.

    Zero matches is a success with an empty entry.
    """
    vdef = session.get_view(view) if isinstance(view, str) else view
    changes = plan_values_correction(session, vdef, attribute, old_value, new_value)
    return _commit(session, vdef, changes, actor)


def _commit(session: "Session", vdef: "ViewDef", changes: list[CellChange], actor: str) -> AuditEntry:
    entry = AuditEntry(
        id=session.next_audit_id(),
        scope_view=vdef.id,
        changes=changes,
        actor=actor,
        timestamp=now_iso(),
        touched_marks=touched_marks_for(session, changes, vdef.table),
    )
    session.apply_audit_entry(entry, changelog_kind="correction")
    return entry


def undo(session: "Session", audit_entry_id: int, *, actor: str = "undo") -> AuditEntry:
    """Revert an entry by appending a compensating one.

    Refuses (conflict) when any affected cell no longer holds the entry's
    new value, and (state) when the entry is already undone.
    """
    entry = session.get_audit_entry(audit_entry_id)
    if entry.undone:
        raise StateError(f"audit entry {entry.id} is already undone", detail={"entry": entry.id})
    conflicts = []
    for change in entry.changes:
        table = session.get_table(change.cell.table)
        current = table.rows[change.cell.row_id].values[change.cell.attribute]
        if current != change.new:
            conflicts.append(
                {"row": change.cell.row_id, "attr": change.cell.attribute,
                 "expected": change.new, "actual": current}
            )
    if conflicts:
        raise ConflictError(
            f"cannot undo entry {entry.id}: {len(conflicts)} cell(s) were edited since",
            detail={"cells": conflicts},
        )
    compensating = AuditEntry(
        id=session.next_audit_id(),
        scope_view=entry.scope_view,
        changes=[CellChange(cell=c.cell, old=c.new, new=c.old) for c in entry.changes],
        actor=actor,
        timestamp=now_iso(),
        undo_of=entry.id,
    )
    vdef = session.get_view(entry.scope_view)
    compensating.touched_marks = touched_marks_for(session, compensating.changes, vdef.table)
    session.apply_audit_entry(compensating, changelog_kind="undo", mark_undone=entry.id)
    return compensating


def history(
    session: "Session",
    *,
    table: str | None = None,
    attribute: str | None = None,
    view: str | None = None,
) -> list[AuditEntry]:
    """Audit entries in sequence order, optionally filtered."""
    result = []
    for entry in session.audit_log:
        if view is not None and entry.scope_view != view:
            continue
        if table is not None and not any(c.cell.table == table for c in entry.changes):
            continue
        if attribute is not None and not any(c.cell.attribute == attribute for c in entry.changes):
            continue
        result.append(entry)
    return result


def suggest_from_history(
    session: "Session",
    table: str,
    attribute: str,
    value: CellValue,
) -> list[SubstitutionRule]:
    """Substitution rules observed for (attribute, old=value), best-supported first.

    Derived from non-undone entries only; compensating (undo) entries are
    skipped so an undone correction and its inverse contribute nothing.
    Support counts individual cell changes; ties break by recency.
    """
    stats: dict[CellValue, list[int]] = {}
    for entry in session.audit_log:
        if entry.undone or entry.undo_of is not None:
            continue
        for change in entry.changes:
            if change.cell.table != table or change.cell.attribute != attribute:
                continue
            if change.old != value or change.old == change.new:
                continue
            stats.setdefault(change.new, [0, 0])
            stats[change.new][0] += 1
            stats[change.new][1] = entry.id
    ranked = sorted(stats.items(), key=lambda kv: (-kv[1][0], -kv[1][1]))
    return [
        SubstitutionRule(attribute=attribute, old=value, new=new, support=count)
        for new, (count, _last) in ranked
    ]
