"""Response payload builders shared by the HTTP service and the CLI.

The CLI contract is that a command's JSON output is byte-identical to the
corresponding API response body, so both layers must build payloads here
and serialize them with :func:`dump_json`.
"""

from __future__ import annotations

import json
from typing import TYPE_CHECKING, Any, Sequence

from .errors import ValidationError
from .fd import RemovalSuggestion, ViolationReport
from .model import Row, Table
from .session import Session
from .suggest import SuggestionCandidate
from .variants import VariantGroup
from .views import ViewDef, ViewEvaluation, evaluate_view

if TYPE_CHECKING:
    from .corrections import AuditEntry, CellChange, SubstitutionRule
    from .marking import MarkSet


def dump_json(payload: Any) -> bytes:
    """Exactly the serialization FastAPI's JSONResponse uses."""
    return json.dumps(
        payload, ensure_ascii=False, allow_nan=False, indent=None, separators=(",", ":")
    ).encode("utf-8")


def session_payload(session: Session) -> dict:
    return {
        "id": session.id,
        "created_at": session.created_at,
        "tables": [table_payload(t) for t in session.tables.values()],
        "views": len(session.views),
        "marks": len(session.mark_sets),
        "audit_entries": len(session.audit_log),
    }


def table_payload(table: Table) -> dict:
    return {"table": table.name, "attributes": list(table.attributes), "rows": len(table.rows)}


def row_payload(row: Row, attributes: Sequence[str]) -> dict:
    return {"id": row.row_id, "values": {a: row.values[a] for a in attributes}}


def rows_payload(evaluation: ViewEvaluation, attributes: Sequence[str]) -> dict:
    return {
        "rows": [row_payload(r, attributes) for r in evaluation.rows],
        "total_count": evaluation.total_count,
        "marked_cells": evaluation.marked_cells,
    }


def view_payload(session: Session, view: ViewDef) -> dict:
    count = evaluate_view(session, view).total_count
    payload = view.to_wire()
    payload["rows"] = count
    payload["empty"] = count == 0
    return payload


def lineage_payload(session: Session, chain: Sequence[ViewDef]) -> dict:
    return {"chain": [view_payload(session, v) for v in chain]}


def mark_set_payload(mark_set: "MarkSet") -> dict:
    return mark_set.to_wire()


def unmark_payload(mark_set: "MarkSet | None") -> dict:
    if mark_set is None:
        return {"mark_set": None, "deleted": True}
    return {"mark_set": mark_set.to_wire(), "deleted": False}


def correction_payload(entry: "AuditEntry") -> dict:
    payload = entry.to_wire()
    payload["touched_marks"] = entry.touched_marks
    return payload


def preview_payload(view_id: str, changes: Sequence["CellChange"], touched_marks: list[dict]) -> dict:
    return {
        "preview": True,
        "view": view_id,
        "changes": [c.to_wire() for c in changes],
        "touched_marks": touched_marks,
    }


def history_payload(entries: Sequence["AuditEntry"]) -> dict:
    return {"entries": [e.to_wire() for e in entries]}


def report_payload(report: ViolationReport) -> dict:
    return report.to_wire()


def discovery_payload(fds) -> dict:
    return {"fds": [fd.text() for fd in fds]}


def removal_payload(suggestion: RemovalSuggestion) -> dict:
    return suggestion.to_wire()


def variants_payload(groups: Sequence[VariantGroup], proposed: Sequence[dict]) -> dict:
    return {"groups": [g.to_wire() for g in groups], "proposed_marks": list(proposed)}


def suggestions_payload(candidates: Sequence[SuggestionCandidate], mark_set_id: str) -> dict:
    return {
        "mark_set": mark_set_id,
        "suggestions": [c.to_wire(rank=i) for i, c in enumerate(candidates)],
    }


def rules_payload(rules: Sequence["SubstitutionRule"]) -> dict:
    return {"rules": [r.to_wire() for r in rules]}


def resolve_scope(
    session: Session, *, table: str | None = None, view: str | None = None
) -> tuple[Table, list[Row] | None]:
    """A detection target: a base table, or a view's current rows over it.

    Returns (table, rows); rows is None for whole-table scope so callers can
    pass the engine default.
    """
    if (table is None) == (view is None):
        raise ValidationError('exactly one of "table" or "view" is required')
    if table is not None:
        return session.get_table(table), None
    vdef = session.get_view(view)
    rows = evaluate_view(session, vdef).rows
    return session.get_table(vdef.table), rows
