"""Session state: tables, mark sets, views, audit log, changelog, persistence.

A session is the unit of isolation.  All mutations funnel through primitive
methods here, each of which (a) holds the session's writer lock, (b) applies
the state change, and (c) appends exactly one changelog record.  Replaying
the changelog over the session's initial snapshot rebuilds the exact state,
because records carry the ids and timestamps that were assigned, not
instructions to regenerate them.

Concurrency: single writer, independent sessions.  The writer lock is
reentrant so compound engine operations (validate, then commit) can hold it
across their whole span; concurrent mutations queue on the lock.
"""

from __future__ import annotations

import json
import threading
import uuid
from typing import IO, Any

from .errors import IngestError, NotFoundError, RestoreError
from .marking import MarkSet
from .model import CellRef, Table, load_csv, now_iso
from .views import ViewDef

SNAPSHOT_FORMAT = "viewclean-session/1"


def _json_bytes(payload: Any) -> bytes:
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


class Session:
    """One user's cleaning workspace."""

    def __init__(self, session_id: str | None = None, created_at: str | None = None) -> None:
        self.id = session_id or f"s-{uuid.uuid4().hex[:12]}"
        self.created_at = created_at or now_iso()
        self.tables: dict[str, Table] = {}
        self.mark_sets: dict[str, MarkSet] = {}
        self.views: dict[str, ViewDef] = {}
        self.audit_log: list = []
        self.changelog: list[dict] = []
        self._audit_index: dict[int, Any] = {}
        self._counters = {"view": 0, "mark": 0, "audit": 0, "changelog": 0}
        self._lock = threading.RLock()

    def writer(self) -> threading.RLock:
        return self._lock

    # -- id allocation ----------------------------------------------------

    def next_view_id(self) -> str:
        with self._lock:
            self._counters["view"] += 1
            return f"v{self._counters['view']}"

    def next_mark_id(self) -> str:
        with self._lock:
            self._counters["mark"] += 1
            return f"m{self._counters['mark']}"

    def next_audit_id(self) -> int:
        with self._lock:
            self._counters["audit"] += 1
            return self._counters["audit"]

    def _bump_counter(self, name: str, value: int) -> None:
        if value > self._counters[name]:
            self._counters[name] = value

    # -- lookups ----------------------------------------------------------

    def get_table(self, name: str) -> Table:
        table = self.tables.get(name)
        if table is None:
            raise NotFoundError(f"unknown table {name!r}", detail={"table": name})
        return table

    def get_view(self, view_id: str) -> ViewDef:
        view = self.views.get(view_id)
        if view is None:
            raise NotFoundError(f"unknown view {view_id!r}", detail={"view": view_id})
        return view

    def get_mark_set(self, mark_set_id: str) -> MarkSet:
        mark_set = self.mark_sets.get(mark_set_id)
        if mark_set is None:
            raise NotFoundError(f"unknown mark set {mark_set_id!r}", detail={"mark_set": mark_set_id})
        return mark_set

    def get_audit_entry(self, entry_id: int):
        entry = self._audit_index.get(entry_id)
        if entry is None:
            raise NotFoundError(f"unknown audit entry {entry_id!r}", detail={"entry": entry_id})
        return entry

    def resolve_cell(self, cell: CellRef) -> CellRef:
        """Normalize a cell reference or raise NotFoundError naming the cell."""
        resolved = self.resolve_cell_lenient(cell)
        if resolved is None:
            raise NotFoundError(
                f"cell ({cell.table!r}, {cell.row_id!r}, {cell.attribute!r}) does not resolve",
                detail={"cell": cell.to_wire()},
            )
        return resolved

    def resolve_cell_lenient(self, cell: CellRef) -> CellRef | None:
        table = self.tables.get(cell.table)
        if table is None or not table.has_attribute(cell.attribute):
            return None
        row_id = table.resolve_row_id(cell.row_id)
        if row_id is None:
            return None
        return CellRef(table=cell.table, row_id=row_id, attribute=cell.attribute)

    def marked_cells_index(self, table: str) -> dict[CellRef, set[str]]:
        """cell -> ids of the mark sets containing it, for one table."""
        index: dict[CellRef, set[str]] = {}
        for mark_set in self.mark_sets.values():
            for cell in mark_set.cells:
                if cell.table == table:
                    index.setdefault(cell, set()).add(mark_set.id)
        return index

    # -- changelog --------------------------------------------------------

    def _record(self, kind: str, payload: dict, *, seq: int | None = None, timestamp: str | None = None) -> dict:
        if seq is None:
            self._counters["changelog"] += 1
            seq = self._counters["changelog"]
        else:
            self._bump_counter("changelog", seq)
        record = {"seq": seq, "kind": kind, "payload": payload, "timestamp": timestamp or now_iso()}
        self.changelog.append(record)
        return record

    def changelog_jsonl(self) -> bytes:
        return b"".join(_json_bytes(record) + b"\n" for record in self.changelog)

    # -- mutation primitives (each appends exactly one changelog record) ---

    def load_table(
        self,
        source: bytes | str | IO[bytes] | IO[str],
        *,
        name: str = "table",
        has_header: bool = True,
        id_attribute: str | None = None,
    ) -> Table:
        with self._lock:
            if name in self.tables:
                raise IngestError(f"table {name!r} already loaded", detail={"table": name})
            table = load_csv(source, name=name, has_header=has_header, id_attribute=id_attribute)
            self.tables[name] = table
            self._record(
                "ingest",
                {
                    "table": table.state_payload(),
                    "options": {"has_header": has_header, "id_attribute": id_attribute},
                },
            )
            return table

    def add_mark_set(self, mark_set: MarkSet) -> None:
        with self._lock:
            self.mark_sets[mark_set.id] = mark_set
            self._record("mark", {"mark_set": mark_set.to_wire()})

    def update_mark_set(self, mark_set_id: str, remaining: list[CellRef]) -> MarkSet | None:
        with self._lock:
            mark_set = self.get_mark_set(mark_set_id)
            deleted = not remaining
            if deleted:
                del self.mark_sets[mark_set_id]
            else:
                mark_set.cells = list(remaining)
            self._record(
                "unmark",
                {
                    "mark_set": mark_set_id,
                    "remaining": [c.to_wire() for c in remaining],
                    "deleted": deleted,
                },
            )
            return None if deleted else mark_set

    def add_view(self, view: ViewDef) -> None:
        with self._lock:
            self.views[view.id] = view
            self._record("create_view", {"view": view.to_wire()})

    def apply_audit_entry(self, entry, *, changelog_kind: str, mark_undone: int | None = None) -> None:
        with self._lock:
            for change in entry.changes:
                table = self.get_table(change.cell.table)
                table.rows[change.cell.row_id].values[change.cell.attribute] = change.new
            self.audit_log.append(entry)
            self._audit_index[entry.id] = entry
            if mark_undone is not None:
                self._audit_index[mark_undone].undone = True
            payload = {"entry": _entry_record(entry)}
            if mark_undone is not None:
                payload["undoes"] = mark_undone
            self._record(changelog_kind, payload)

    # -- snapshot / restore -------------------------------------------------

    def snapshot(self) -> bytes:
        """Whole-session state as one JSON document."""
        with self._lock:
            doc = {
                "format": SNAPSHOT_FORMAT,
                "session": {"id": self.id, "created_at": self.created_at},
                "tables": [t.state_payload() for t in self.tables.values()],
                "marks": [m.to_wire() for m in self.mark_sets.values()],
                "views": [v.to_wire() for v in self.views.values()],
                "audit": [_entry_record(e) for e in self.audit_log],
                "changelog": self.changelog,
                "counters": dict(self._counters),
            }
            return _json_bytes(doc)

    @classmethod
    def restore(cls, stream: bytes | str | IO[bytes]) -> Session:
        """Rebuild a session from a snapshot; corrupt input raises RestoreError."""
        raw = stream if isinstance(stream, (bytes, str)) else stream.read()
        try:
            doc = json.loads(raw)
            if not isinstance(doc, dict) or doc.get("format") != SNAPSHOT_FORMAT:
                raise RestoreError(f"not a {SNAPSHOT_FORMAT} snapshot")
            session = cls(session_id=doc["session"]["id"], created_at=doc["session"]["created_at"])
            for payload in doc["tables"]:
                table = Table.from_state_payload(payload)
                session.tables[table.name] = table
            for payload in doc["marks"]:
                session.mark_sets[payload["id"]] = _mark_set_from_record(payload)
            for payload in doc["views"]:
                view = ViewDef.from_wire(payload)
                session.views[view.id] = view
            for payload in doc["audit"]:
                entry = _entry_from_record(payload)
                session.audit_log.append(entry)
                session._audit_index[entry.id] = entry
            session.changelog = list(doc["changelog"])
            session._counters.update({k: int(v) for k, v in doc["counters"].items()})
            session._check_references()
            return session
        except RestoreError:
            raise
        except Exception as exc:
            raise RestoreError(f"corrupt snapshot: {exc}") from None

    def _check_references(self) -> None:
        for mark_set in self.mark_sets.values():
            for cell in mark_set.cells:
                if self.resolve_cell_lenient(cell) is None:
                    raise RestoreError(f"mark set {mark_set.id} references unresolvable cell {cell}")
        for view in self.views.values():
            if view.table not in self.tables:
                raise RestoreError(f"view {view.id} references unknown table {view.table!r}")
            if view.parent is not None and view.parent not in self.views:
                raise RestoreError(f"view {view.id} references unknown parent {view.parent!r}")
        for entry in self.audit_log:
            if entry.scope_view not in self.views:
                raise RestoreError(f"audit entry {entry.id} references unknown view {entry.scope_view!r}")

    # -- replay -------------------------------------------------------------

    def apply_changelog_record(self, record: dict) -> None:
        """Apply one stored record verbatim (ids and timestamps preserved)."""
        with self._lock:
            kind = record["kind"]
            payload = record["payload"]
            if kind == "ingest":
                table = Table.from_state_payload(payload["table"])
                self.tables[table.name] = table
            elif kind == "mark":
                mark_set = _mark_set_from_record(payload["mark_set"])
                self.mark_sets[mark_set.id] = mark_set
                self._bump_counter("mark", _numeric_suffix(mark_set.id))
            elif kind == "unmark":
                mark_set_id = payload["mark_set"]
                if payload["deleted"]:
                    self.mark_sets.pop(mark_set_id, None)
                else:
                    self.mark_sets[mark_set_id].cells = [
                        _cell_from_record(c) for c in payload["remaining"]
                    ]
            elif kind == "create_view":
                view = ViewDef.from_wire(payload["view"])
                self.views[view.id] = view
                self._bump_counter("view", _numeric_suffix(view.id))
            elif kind in ("correction", "undo"):
                entry = _entry_from_record(payload["entry"])
                for change in entry.changes:
                    table = self.get_table(change.cell.table)
                    table.rows[change.cell.row_id].values[change.cell.attribute] = change.new
                self.audit_log.append(entry)
                self._audit_index[entry.id] = entry
                self._bump_counter("audit", entry.id)
                if "undoes" in payload:
                    self._audit_index[payload["undoes"]].undone = True
            else:
                raise RestoreError(f"unknown changelog record kind {kind!r}")
            self.changelog.append(record)
            self._bump_counter("changelog", record["seq"])

    # -- canonical state for comparisons ------------------------------------

    def table_state_bytes(self) -> bytes:
        """Canonical serialization of all table contents (byte-comparable)."""
        with self._lock:
            return _json_bytes([t.state_payload() for t in self.tables.values()])


def _numeric_suffix(identifier: str) -> int:
    digits = "".join(ch for ch in identifier if ch.isdigit())
    return int(digits) if digits else 0


def _cell_from_record(data: dict) -> CellRef:
    return CellRef(table=data["table"], row_id=data["row"], attribute=data["attr"])


def _mark_set_from_record(data: dict) -> MarkSet:
    return MarkSet(
        id=data["id"],
        label=data["label"],
        cells=[_cell_from_record(c) for c in data["cells"]],
        created_at=data["created_at"],
        origin=data["origin"],
    )


def _entry_record(entry) -> dict:
    record = entry.to_wire()
    record["table"] = entry.changes[0].cell.table if entry.changes else None
    record["touched_marks"] = entry.touched_marks
    return record


def _entry_from_record(data: dict):
    from .corrections import AuditEntry, CellChange

    table = data.get("table")
    changes = [
        CellChange(
            cell=CellRef(table=table, row_id=c["row"], attribute=c["attr"]),
            old=c["old"],
            new=c["new"],
        )
        for c in data["changes"]
    ]
    return AuditEntry(
        id=data["id"],
        scope_view=data["view"],
        changes=changes,
        actor=data["actor"],
        timestamp=data["ts"],
        undone=data["undone"],
        undo_of=data.get("undo_of"),
        touched_marks=data.get("touched_marks", []),
    )
