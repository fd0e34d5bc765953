"""Data marking: flagging cells as suspect without touching their values.

Marks attach to cells, not to values: two cells holding the same string are
marked (and later judged) independently.  Marks survive corrections; a
correction only reports which marked cells it touched, and the user decides
whether to unmark.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .errors import ValidationError
from .model import CellRef, now_iso

if TYPE_CHECKING:
    from .session import Session
    from .views import ViewDef

MARK_ORIGINS = ("manual", "variant_detector", "fd_violation")


@dataclass
class MarkSet:
    """A named group of suspect cells recorded in one marking action."""

    id: str
    label: str | None
    cells: list[CellRef] = field(default_factory=list)
    created_at: str = ""
    origin: str = "manual"

    def cell_set(self) -> set[CellRef]:
        return set(self.cells)

    def to_wire(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "origin": self.origin,
            "created_at": self.created_at,
            "cells": [c.to_wire() for c in self.cells],
        }


def mark_cells(
    session: "Session",
    cells: Iterable[CellRef],
    *,
    label: str | None = None,
    origin: str = "manual",
) -> MarkSet:
    """Record a new mark set; duplicate cells within the call collapse to one."""
    if origin not in MARK_ORIGINS:
        raise ValidationError(f"unknown mark origin {origin!r}")
    deduped: list[CellRef] = []
    seen: set[CellRef] = set()
    for cell in cells:
        resolved = session.resolve_cell(cell)
        if resolved not in seen:
            seen.add(resolved)
            deduped.append(resolved)
    if not deduped:
        raise ValidationError("a mark set needs at least one cell")
    mark_set = MarkSet(
        id=session.next_mark_id(),
        label=label,
        cells=deduped,
        created_at=now_iso(),
        origin=origin,
    )
    session.add_mark_set(mark_set)
    return mark_set


def unmark(session: "Session", mark_set_id: str, cells: Iterable[CellRef]) -> MarkSet | None:
    """Remove cells from a mark set; removing the last cell deletes the set.

    Cells not present in the set are ignored. Returns the updated set, or
    None when the set was deleted.
    """
    mark_set = session.get_mark_set(mark_set_id)
    to_remove = set()
    for cell in cells:
        resolved = session.resolve_cell_lenient(cell)
        if resolved is not None:
            to_remove.add(resolved)
    remaining = [c for c in mark_set.cells if c not in to_remove]
    return session.update_mark_set(mark_set.id, remaining)


def marks_in_view(session: "Session", view: "str | ViewDef") -> set[CellRef]:
    """All marked cells whose rows currently satisfy the view's condition."""
    from .views import evaluate_view

    vdef = session.get_view(view) if isinstance(view, str) else view
    evaluation = evaluate_view(session, vdef)
    row_ids = {row.row_id for row in evaluation.rows}
    result: set[CellRef] = set()
    for mark_set in session.mark_sets.values():
        for cell in mark_set.cells:
            if cell.table == vdef.table and cell.row_id in row_ids:
                result.add(cell)
    return result
