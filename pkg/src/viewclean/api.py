"""HTTP/JSON service exposing sessions and every engine operation.

This is the concurrency boundary: mutating requests acquire the target
session's writer lock for their whole span (concurrent mutations queue, they
are never rejected), reads serve a consistent snapshot, and sessions are
fully independent.  Ids for marks, views and tables are session-scoped; a
request may pin the session explicitly (``session`` query parameter or body
field), otherwise the id must resolve in exactly one live session.

Every error renders as ``{"error": {"code", "message", "detail"}}`` with
400 for validation problems, 404 for unknown ids and 409 for undo conflicts
and scope violations.  A 4xx response never leaves a partial mutation
behind: handlers validate first and commit through single primitives.
"""

from __future__ import annotations

import json
from typing import Any, Callable

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import corrections as corrections_engine
from . import fd as fd_engine
from . import marking as marking_engine
from . import payloads
from . import suggest as suggest_engine
from . import variants as variants_engine
from . import views as views_engine
from .errors import (
    AmbiguousIdError,
    ConflictError,
    NotFoundError,
    ScopeError,
    StateError,
    ValidationError,
    ViewCleanError,
)
from .model import CellRef, export_csv
from .session import Session
from .suggest import SuggestionParams
from .variants import NormalizationPolicy
from .views import ViewCondition, parse_atoms

DEFAULT_PAGE_LIMIT = 100


class SessionService:
    """Registry of live sessions plus cross-session id resolution."""

    def __init__(self) -> None:
        self.sessions: dict[str, Session] = {}

    def create(self, snapshot: bytes | str | None = None) -> Session:
        session = Session.restore(snapshot) if snapshot is not None else Session()
        if session.id in self.sessions:
            raise StateError(f"session {session.id!r} already registered", detail={"session": session.id})
        self.sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"unknown session {session_id!r}", detail={"session": session_id})
        return session

    def _resolve(self, probe: Callable[[Session], bool], kind: str, key: Any,
                 session_id: str | None) -> Session:
        if session_id is not None:
            session = self.get(session_id)
            if not probe(session):
                raise NotFoundError(f"unknown {kind} {key!r}", detail={kind: key})
            return session
        owners = [s for s in self.sessions.values() if probe(s)]
        if not owners:
            raise NotFoundError(f"unknown {kind} {key!r}", detail={kind: key})
        if len(owners) > 1:
            raise AmbiguousIdError(
                f"{kind} {key!r} exists in {len(owners)} sessions; pass a session id",
                detail={kind: key, "sessions": [s.id for s in owners]},
            )
        return owners[0]

    def for_table(self, name: str, session_id: str | None = None) -> Session:
        return self._resolve(lambda s: name in s.tables, "table", name, session_id)

    def for_view(self, view_id: str, session_id: str | None = None) -> Session:
        return self._resolve(lambda s: view_id in s.views, "view", view_id, session_id)

    def for_mark_set(self, mark_set_id: str, session_id: str | None = None) -> Session:
        return self._resolve(lambda s: mark_set_id in s.mark_sets, "mark_set", mark_set_id, session_id)

    def for_audit_entry(self, entry_id: int, session_id: str | None = None) -> Session:
        return self._resolve(
            lambda s: any(e.id == entry_id for e in s.audit_log), "entry", entry_id, session_id
        )


async def _read_json(request: Request, *, optional: bool = False) -> dict:
    raw = await request.body()
    if not raw:
        if optional:
            return {}
        raise ValidationError("request body must be a JSON object")
    try:
        body = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON body: {exc}") from None
    if not isinstance(body, dict):
        raise ValidationError("request body must be a JSON object")
    return body


def _cell_from_body(data: Any) -> CellRef:
    if not isinstance(data, dict):
        raise ValidationError("cell must be an object with table/row/attr")
    missing = {"table", "row", "attr"} - set(data)
    if missing:
        raise ValidationError(f"cell missing keys: {sorted(missing)}")
    return CellRef(table=data["table"], row_id=data["row"], attribute=data["attr"])


def _parse_fd_list(body: dict) -> list[fd_engine.FD]:
    if "fds" in body:
        texts = body["fds"]
        if not isinstance(texts, list) or not texts:
            raise ValidationError('"fds" must be a non-empty list of dependency strings')
    elif "fd" in body:
        texts = [body["fd"]]
    else:
        raise ValidationError('body needs "fd" or "fds"')
    return [fd_engine.parse_fd(text) for text in texts]


def create_app(service: SessionService | None = None, ui_dir: str | None = None) -> FastAPI:
    service = service or SessionService()
    app = FastAPI(title="viewclean", docs_url=None, redoc_url=None)
    app.state.service = service

    def error_response(status: int, exc: ViewCleanError) -> JSONResponse:
        return JSONResponse(
            status_code=status,
            content={"error": {"code": exc.code, "message": exc.message, "detail": exc.detail}},
        )

    @app.exception_handler(ViewCleanError)
    async def handle_viewclean_error(_request: Request, exc: ViewCleanError) -> JSONResponse:
        if isinstance(exc, NotFoundError):
            return error_response(404, exc)
        if isinstance(exc, (ConflictError, ScopeError, StateError)):
            return error_response(409, exc)
        return error_response(400, exc)

    @app.exception_handler(RequestValidationError)
    async def handle_request_validation(_request: Request, exc: RequestValidationError) -> JSONResponse:
        return error_response(400, ValidationError("invalid request", detail={"errors": str(exc)}))

    # -- sessions -----------------------------------------------------------

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await _read_json(request, optional=True)
        snapshot = body.get("snapshot")
        if snapshot is not None:
            session = service.create(json.dumps(snapshot))
        else:
            session = service.create()
        return payloads.session_payload(session)

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return payloads.session_payload(service.get(session_id))

    @app.get("/sessions/{session_id}/snapshot")
    async def get_snapshot(session_id: str):
        return Response(content=service.get(session_id).snapshot(), media_type="application/json")

    @app.get("/sessions/{session_id}/changelog")
    async def get_changelog(session_id: str):
        return Response(
            content=service.get(session_id).changelog_jsonl(), media_type="application/x-ndjson"
        )

    @app.post("/sessions/{session_id}/tables", status_code=201)
    async def upload_table(
        session_id: str,
        request: Request,
        name: str = "table",
        id_attribute: str | None = None,
        has_header: bool = True,
    ):
        session = service.get(session_id)
        body = await request.body()
        with session.writer():
            table = session.load_table(
                body, name=name, has_header=has_header, id_attribute=id_attribute
            )
        return payloads.table_payload(table)

    # -- tables ---------------------------------------------------------------

    @app.get("/tables/{name}/rows")
    async def table_rows(
        name: str,
        session: str | None = None,
        view: str | None = None,
        offset: int = 0,
        limit: int = DEFAULT_PAGE_LIMIT,
    ):
        sess = service.for_table(name, session)
        if view is not None:
            vdef = sess.get_view(view)
            if vdef.table != name:
                raise ValidationError(
                    f"view {view!r} is over table {vdef.table!r}, not {name!r}",
                    detail={"view": view, "table": name},
                )
            condition = vdef.condition
        else:
            condition = ViewCondition.of(())
        evaluation = views_engine.evaluate_condition(sess, name, condition, offset=offset, limit=limit)
        return payloads.rows_payload(evaluation, sess.get_table(name).attributes)

    @app.get("/tables/{name}/export")
    async def table_export(name: str, session: str | None = None):
        sess = service.for_table(name, session)
        return Response(content=export_csv(sess.get_table(name)), media_type="text/csv")

    # -- marks ----------------------------------------------------------------

    @app.post("/marks", status_code=201)
    async def create_marks(request: Request):
        body = await _read_json(request)
        cells = body.get("cells")
        if not isinstance(cells, list) or not cells:
            raise ValidationError('"cells" must be a non-empty list')
        refs = [_cell_from_body(c) for c in cells]
        tables = {ref.table for ref in refs}
        if len(tables) != 1:
            raise ValidationError("all cells in one mark set must reference one table")
        sess = service.for_table(next(iter(tables)), body.get("session"))
        with sess.writer():
            mark_set = marking_engine.mark_cells(
                sess, refs, label=body.get("label"), origin=body.get("origin", "manual")
            )
        return payloads.mark_set_payload(mark_set)

    @app.get("/marks")
    async def list_marks(session: str | None = None, table: str | None = None):
        if session is not None:
            sessions = [service.get(session)]
        elif table is not None:
            sessions = [service.for_table(table)]
        else:
            sessions = list(service.sessions.values())
        sets = []
        for sess in sessions:
            for mark_set in sess.mark_sets.values():
                if table is None or any(c.table == table for c in mark_set.cells):
                    sets.append(payloads.mark_set_payload(mark_set))
        return {"mark_sets": sets}

    @app.delete("/marks/{mark_set_id}/cells")
    async def delete_mark_cells(mark_set_id: str, request: Request):
        body = await _read_json(request)
        cells = body.get("cells")
        if not isinstance(cells, list) or not cells:
            raise ValidationError('"cells" must be a non-empty list')
        sess = service.for_mark_set(mark_set_id, body.get("session"))
        refs = [_cell_from_body(c) for c in cells]
        with sess.writer():
            updated = marking_engine.unmark(sess, mark_set_id, refs)
        return payloads.unmark_payload(updated)

    # -- views ------------------------------------------------------------------

    @app.post("/views", status_code=201)
    async def create_view(request: Request):
        body = await _read_json(request)
        session_id = body.get("session")
        modes = [key for key in ("table", "refine", "relax", "from_marks") if key in body]
        if len(modes) != 1:
            raise ValidationError(
                'body needs exactly one of "table", "refine", "relax", "from_marks"'
            )
        mode = modes[0]

        if mode == "table":
            sess = service.for_table(body["table"], session_id)
            condition = ViewCondition.of(parse_atoms(body.get("atoms", [])))
            with sess.writer():
                view = views_engine.create_view(sess, body["table"], condition)
        elif mode == "refine":
            sess = service.for_view(body["refine"], session_id)
            with sess.writer():
                view = views_engine.refine_view(sess, body["refine"], parse_atoms(body.get("atoms", [])))
        elif mode == "relax":
            sess = service.for_view(body["relax"], session_id)
            with sess.writer():
                view = views_engine.relax_view(sess, body["relax"], parse_atoms(body.get("atoms", [])))
        else:
            sess = service.for_mark_set(body["from_marks"], session_id)
            mark_set = sess.get_mark_set(body["from_marks"])
            if "atoms" in body:
                condition = ViewCondition.of(parse_atoms(body["atoms"]))
            else:
                ranked = suggest_engine.suggest_views(sess, mark_set)
                if not ranked:
                    raise ValidationError(
                        "no covering condition exists for this mark set",
                        detail={"mark_set": mark_set.id},
                    )
                condition = ranked[0].condition
            table = mark_set.cells[0].table
            with sess.writer():
                view = views_engine.create_view(sess, table, condition, derivation="from_marks")
        return payloads.view_payload(sess, view)

    @app.get("/views/{view_id}/rows")
    async def view_rows(
        view_id: str,
        session: str | None = None,
        offset: int = 0,
        limit: int = DEFAULT_PAGE_LIMIT,
    ):
        sess = service.for_view(view_id, session)
        evaluation = views_engine.evaluate_view(sess, view_id, offset=offset, limit=limit)
        attributes = sess.get_table(sess.get_view(view_id).table).attributes
        return payloads.rows_payload(evaluation, attributes)

    @app.get("/views/{view_id}/lineage")
    async def view_lineage(view_id: str, session: str | None = None):
        sess = service.for_view(view_id, session)
        return payloads.lineage_payload(sess, views_engine.view_lineage(sess, view_id))

    # -- corrections ---------------------------------------------------------------

    @app.post("/corrections", status_code=201)
    async def create_correction(request: Request, preview: bool = False):
        body = await _read_json(request)
        if "view" not in body:
            raise ValidationError('body needs a "view" id')
        sess = service.for_view(body["view"], body.get("session"))
        actor = body.get("actor", "anonymous")
        is_cell = "cell" in body
        if is_cell == ("attribute" in body):
            raise ValidationError('body needs either "cell" or "attribute"')

        if preview:
            if is_cell:
                raise ValidationError("preview is only supported for batch corrections")
            changes = corrections_engine.plan_values_correction(
                sess, body["view"], body["attribute"], body.get("old"), body.get("new")
            )
            vdef = sess.get_view(body["view"])
            touched = corrections_engine.touched_marks_for(sess, changes, vdef.table)
            return JSONResponse(
                status_code=200,
                content=payloads.preview_payload(body["view"], changes, touched),
            )

        with sess.writer():
            if is_cell:
                if "new" not in body:
                    raise ValidationError('cell correction needs a "new" value')
                entry = corrections_engine.correct_cell(
                    sess, body["view"], _cell_from_body(body["cell"]), body["new"], actor
                )
            else:
                entry = corrections_engine.correct_values(
                    sess, body["view"], body["attribute"], body.get("old"), body.get("new"), actor
                )
        return payloads.correction_payload(entry)

    @app.post("/corrections/{entry_id}/undo")
    async def undo_correction(entry_id: int, request: Request):
        body = await _read_json(request, optional=True)
        sess = service.for_audit_entry(entry_id, body.get("session"))
        with sess.writer():
            compensating = corrections_engine.undo(sess, entry_id, actor=body.get("actor", "undo"))
        return payloads.correction_payload(compensating)

    @app.get("/history")
    async def get_history(
        session: str | None = None,
        table: str | None = None,
        attribute: str | None = None,
        view: str | None = None,
    ):
        if session is not None:
            sess = service.get(session)
        elif view is not None:
            sess = service.for_view(view)
        elif table is not None:
            sess = service.for_table(table)
        elif len(service.sessions) == 1:
            sess = next(iter(service.sessions.values()))
        else:
            raise ValidationError("pass a session id (or table/view filter) to select a session")
        entries = corrections_engine.history(sess, table=table, attribute=attribute, view=view)
        return payloads.history_payload(entries)

    # -- detection -------------------------------------------------------------------

    def _scoped(body: dict) -> tuple[Session, Any, Any]:
        table_name = body.get("table")
        view_id = body.get("view")
        if table_name is not None:
            sess = service.for_table(table_name, body.get("session"))
        elif view_id is not None:
            sess = service.for_view(view_id, body.get("session"))
        else:
            raise ValidationError('body needs "table" or "view"')
        table, rows = payloads.resolve_scope(sess, table=table_name, view=view_id)
        return sess, table, rows

    @app.post("/detect/fd/check")
    async def detect_fd_check(request: Request):
        body = await _read_json(request)
        if "fd" not in body:
            raise ValidationError('body needs an "fd" string like "NP -> OP"')
        _sess, table, rows = _scoped(body)
        report = fd_engine.check_fd(table, fd_engine.parse_fd(body["fd"]), rows)
        return payloads.report_payload(report)

    @app.post("/detect/fd/discover")
    async def detect_fd_discover(request: Request):
        body = await _read_json(request)
        if "table" not in body:
            raise ValidationError('body needs a "table"')
        sess = service.for_table(body["table"], body.get("session"))
        max_lhs = body.get("max_lhs", 2)
        if not isinstance(max_lhs, int):
            raise ValidationError('"max_lhs" must be an integer')
        fds = fd_engine.discover_fds(sess.get_table(body["table"]), max_lhs)
        return payloads.discovery_payload(fds)

    @app.post("/detect/fd/minimal-removal")
    async def detect_minimal_removal(request: Request):
        body = await _read_json(request)
        fds = _parse_fd_list(body)
        _sess, table, rows = _scoped(body)
        return payloads.removal_payload(fd_engine.minimal_removal(table, fds, rows))

    @app.post("/detect/cfd/check")
    async def detect_cfd_check(request: Request):
        body = await _read_json(request)
        if "cfd" not in body:
            raise ValidationError('body needs a "cfd" string like "OP -> OC :: (KU, _)"')
        _sess, table, rows = _scoped(body)
        report = fd_engine.check_cfd(table, fd_engine.parse_cfd(body["cfd"]), rows)
        return payloads.report_payload(report)

    @app.post("/detect/variants")
    async def detect_variants(request: Request):
        body = await _read_json(request)
        if "attribute" not in body:
            raise ValidationError('body needs an "attribute"')
        _sess, table, rows = _scoped(body)
        policy = NormalizationPolicy.from_wire(body.get("policy"))
        groups = variants_engine.find_variant_groups(table, body["attribute"], policy, rows)
        strategy = body.get("strategy", "minority_members")
        proposed = sorted(
            (c.to_wire() for c in variants_engine.propose_marks(groups, strategy)),
            key=lambda c: (c["row"], c["attr"]),
        )
        return payloads.variants_payload(groups, proposed)

    # -- suggestions --------------------------------------------------------------------

    @app.post("/suggest/views")
    async def suggest_views_endpoint(request: Request):
        body = await _read_json(request)
        if "marks" not in body:
            raise ValidationError('body needs a "marks" mark-set id')
        sess = service.for_mark_set(body["marks"], body.get("session"))
        params = SuggestionParams.from_wire(body.get("params"))
        ranked = suggest_engine.suggest_views(sess, body["marks"], params)
        return payloads.suggestions_payload(ranked, body["marks"])

    @app.get("/suggest/corrections")
    async def suggest_corrections(
        table: str, attribute: str, value: str, session: str | None = None
    ):
        sess = service.for_table(table, session)
        rules = corrections_engine.suggest_from_history(sess, table, attribute, value)
        return payloads.rules_payload(rules)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # mounted last so API routes win; html=True serves index.html at /
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


app = create_app()


def main() -> None:  # pragma: no cover - thin launcher
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="Run the viewclean HTTP service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8400)
    args = parser.parse_args()
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":  # pragma: no cover
    main()
