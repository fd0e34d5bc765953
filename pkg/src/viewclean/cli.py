"""Batch and scripting interface; runnable without the HTTP service.

State persists between invocations in a working-directory session file
(the snapshot format), so load -> detect -> correct pipelines compose.  The
``VIEWCLEAN_SESSION`` environment variable overrides the file path.

Every command is a thin adapter over the engines: its JSON output is built
by the same payload builders as the HTTP service, so stdout (minus the
trailing newline) is byte-identical to the corresponding API response body.
Diagnostics go to stderr.  Exit codes: 0 success, 1 operational error,
2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corrections as corrections_engine
from . import fd as fd_engine
from . import marking as marking_engine
from . import payloads
from . import suggest as suggest_engine
from . import variants as variants_engine
from . import views as views_engine
from .errors import ViewCleanError
from .model import CellRef
from .session import Session
from .suggest import SuggestionParams
from .variants import NormalizationPolicy
from .views import ViewCondition

DEFAULT_SESSION_FILE = "viewclean-session.json"
DEFAULT_PAGE_LIMIT = 100


def _emit(payload) -> None:
    sys.stdout.buffer.write(payloads.dump_json(payload) + b"\n")


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_session(path: Path, *, create: bool = False) -> Session:
    if path.exists():
        return Session.restore(path.read_bytes())
    if create:
        return Session()
    _fail(f"no session file at {path}; run 'viewclean load' first")
    raise AssertionError("unreachable")


def _save_session(session: Session, path: Path) -> None:
    path.write_bytes(session.snapshot())


def _default_table(session: Session, table: str | None) -> str:
    if table is not None:
        if table not in session.tables:
            _fail(f"unknown table {table!r}")
        return table
    if len(session.tables) == 1:
        return next(iter(session.tables))
    raise click.UsageError("session has multiple tables; pass --table")


def _scope(session: Session, table: str | None, view: str | None):
    if view is not None:
        return payloads.resolve_scope(session, view=view)
    return payloads.resolve_scope(session, table=_default_table(session, table))


def _parse_json_option(raw: str | None, what: str):
    if raw is None:
        return None
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"invalid JSON for {what}: {exc}") from None


@click.group()
@click.option(
    "--session-file",
    envvar="VIEWCLEAN_SESSION",
    default=DEFAULT_SESSION_FILE,
    show_default=True,
    help="Session snapshot file (env: VIEWCLEAN_SESSION).",
)
@click.pass_context
def main(ctx: click.Context, session_file: str) -> None:
    """Interactive view-based data cleaning, scriptable."""
    ctx.obj = Path(session_file)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--id-col", default=None, help="Attribute supplying row ids (must be unique).")
@click.option("--name", default=None, help="Table name (defaults to the file stem).")
@click.option("--no-header", is_flag=True, help="CSV has no header record.")
@click.pass_obj
def load(session_path: Path, csv_path: Path, id_col: str | None, name: str | None, no_header: bool) -> None:
    """Load a CSV into the session (creating the session if needed)."""
    session = _load_session(session_path, create=True)
    try:
        table = session.load_table(
            csv_path.read_bytes(),
            name=name or csv_path.stem,
            has_header=not no_header,
            id_attribute=id_col,
        )
    except ViewCleanError as exc:
        _fail(exc.message)
        return
    _save_session(session, session_path)
    _emit(payloads.table_payload(table))


@main.command()
@click.option("--cond", required=True, help='Condition JSON, e.g. \'{"atoms":[{"attr":"OP","op":"equals","value":"KU"}]}\'.')
@click.option("--table", default=None)
@click.option("--offset", default=0, show_default=True)
@click.option("--limit", default=DEFAULT_PAGE_LIMIT, show_default=True)
@click.pass_obj
def view(session_path: Path, cond: str, table: str | None, offset: int, limit: int) -> None:
    """Create a view from a condition and print its evaluation."""
    data = _parse_json_option(cond, "--cond")
    session = _load_session(session_path)
    try:
        table_name = _default_table(session, table)
        condition = ViewCondition.from_wire(data)
        vdef = views_engine.create_view(session, table_name, condition)
        evaluation = views_engine.evaluate_view(session, vdef, offset=offset, limit=limit)
    except ViewCleanError as exc:
        _fail(exc.message)
        return
    _save_session(session, session_path)
    click.echo(f"view: {vdef.id}", err=True)
    _emit(payloads.rows_payload(evaluation, session.get_table(table_name).attributes))


@main.group()
def detect() -> None:
    """Rule-based detectors that propose cells to mark."""


@detect.command("fd-check")
@click.option("--fd", "fd_text", required=True, help='Dependency, e.g. "NP -> OP".')
@click.option("--table", default=None)
@click.option("--view", "view_id", default=None)
@click.pass_obj
def detect_fd_check(session_path: Path, fd_text: str, table: str | None, view_id: str | None) -> None:
    """Report lhs groups carrying more than one rhs value."""
    session = _load_session(session_path)
    try:
        tbl, rows = _scope(session, table, view_id)
        report = fd_engine.check_fd(tbl, fd_engine.parse_fd(fd_text), rows)
    except ViewCleanError as exc:
        _fail(exc.message)
        return
    _emit(payloads.report_payload(report))


@detect.command("fd-discover")
@click.option("--max-lhs", default=2, show_default=True)
@click.option("--table", default=None)
@click.pass_obj
def detect_fd_discover(session_path: Path, max_lhs: int, table: str | None) -> None:
    """Discover all minimal FDs holding exactly, up to the lhs size bound."""
    session = _load_session(session_path)
    try:
        tbl = session.get_table(_default_table(session, table))
        fds = fd_engine.discover_fds(tbl, max_lhs)
    except ViewCleanError as exc:
        _fail(exc.message)
        return
    _emit(payloads.discovery_payload(fds))


@detect.command("removal")
@click.option("--fd", "fd_texts", required=True, multiple=True, help="Dependency (repeatable).")
@click.option("--table", default=None)
@click.option("--view", "view_id", default=None)
@click.pass_obj
def detect_removal(session_path: Path, fd_texts: tuple[str, ...], table: str | None, view_id: str | None) -> None:
    """Suggest rows whose removal makes the dependencies hold."""
    session = _load_session(session_path)
    try:
        tbl, rows = _scope(session, table, view_id)
        fds = [fd_engine.parse_fd(t) for t in fd_texts]
        suggestion = fd_engine.minimal_removal(tbl, fds, rows)
    except ViewCleanError as exc:
        _fail(exc.message)
        return
    _emit(payloads.removal_payload(suggestion))


@detect.command("cfd")
@click.option("--cfd", "cfd_text", required=True, help='Conditional FD, e.g. "OP -> OC :: (KU, _)".')
@click.option("--table", default=None)
@click.option("--view", "view_id", default=None)
@click.pass_obj
def detect_cfd(session_path: Path, cfd_text: str, table: str | None, view_id: str | None) -> None:
    """Check a pattern-tableau dependency."""
    session = _load_session(session_path)
    try:
        tbl, rows = _scope(session, table, view_id)
        report = fd_engine.check_cfd(tbl, fd_engine.parse_cfd(cfd_text), rows)
    except ViewCleanError as exc:
        _fail(exc.message)
        return
    _emit(payloads.report_payload(report))


@detect.command("variants")
@click.option("--attr", required=True, help="Attribute to cluster.")
@click.option("--policy", default=None, help="Normalization policy JSON.")
@click.option(
    "--strategy",
    default="minority_members",
    type=click.Choice(["all_members", "minority_members"]),
    show_default=True,
)
@click.option("--table", default=None)
@click.option("--view", "view_id", default=None)
@click.pass_obj
def detect_variants(
    session_path: Path,
    attr: str,
    policy: str | None,
    strategy: str,
    table: str | None,
    view_id: str | None,
) -> None:
    """Group values that differ only by token order, case, or separators."""
    session = _load_session(session_path)
    try:
        tbl, rows = _scope(session, table, view_id)
        pol = NormalizationPolicy.from_wire(_parse_json_option(policy, "--policy"))
        groups = variants_engine.find_variant_groups(tbl, attr, pol, rows)
        proposed = sorted(
            (c.to_wire() for c in variants_engine.propose_marks(groups, strategy)),
            key=lambda c: (c["row"], c["attr"]),
        )
    except ViewCleanError as exc:
        _fail(exc.message)
        return
    _emit(payloads.variants_payload(groups, proposed))


@main.command()
@click.option("--marks", required=True, help="Mark-set id, or cells JSON to mark first.")
@click.option("--params", default=None, help="Suggestion params JSON.")
@click.option("--table", default=None)
@click.pass_obj
def suggest(session_path: Path, marks: str, params: str | None, table: str | None) -> None:
    """Rank covering view conditions for a mark set."""
    session = _load_session(session_path)
    try:
        if marks.lstrip().startswith(("[", "{")):
            data = _parse_json_option(marks, "--marks")
            cells = data["cells"] if isinstance(data, dict) else data
            table_name = _default_table(session, table)
            refs = [
                CellRef(table=c.get("table", table_name), row_id=c["row"], attribute=c["attr"])
                for c in cells
            ]
            label = data.get("label") if isinstance(data, dict) else None
            mark_set = marking_engine.mark_cells(session, refs, label=label)
            _save_session(session, session_path)
            click.echo(f"mark set: {mark_set.id}", err=True)
            mark_set_id = mark_set.id
        else:
            mark_set_id = marks
        ranked = suggest_engine.suggest_views(
            session, mark_set_id, SuggestionParams.from_wire(_parse_json_option(params, "--params"))
        )
    except (ViewCleanError, KeyError) as exc:
        _fail(exc.message if isinstance(exc, ViewCleanError) else f"bad cells JSON: missing {exc}")
        return
    _emit(payloads.suggestions_payload(ranked, mark_set_id))


@main.command()
@click.option("--view", "view_id", required=True)
@click.option("--attr", default=None, help="Batch mode: attribute to rewrite.")
@click.option("--old", default=None, help="Batch mode: value to replace.")
@click.option("--new", "new_value", required=True)
@click.option("--cell", default=None, help='Cell mode: \'{"row":1,"attr":"OP"}\'.')
@click.option("--actor", default="cli", show_default=True)
@click.option("--preview", is_flag=True, help="Report would-be changes without applying.")
@click.pass_obj
def correct(
    session_path: Path,
    view_id: str,
    attr: str | None,
    old: str | None,
    new_value: str,
    cell: str | None,
    actor: str,
    preview: bool,
) -> None:
    """Correct one cell or every matching value within a view."""
    if (cell is None) == (attr is None):
        raise click.UsageError("pass either --cell or --attr/--old")
    session = _load_session(session_path)
    try:
        if preview:
            if cell is not None:
                raise click.UsageError("--preview only applies to batch corrections")
            changes = corrections_engine.plan_values_correction(session, view_id, attr, old, new_value)
            vdef = session.get_view(view_id)
            touched = corrections_engine.touched_marks_for(session, changes, vdef.table)
            _emit(payloads.preview_payload(view_id, changes, touched))
            return
        if cell is not None:
            data = _parse_json_option(cell, "--cell")
            vdef = session.get_view(view_id)
            ref = CellRef(table=data.get("table", vdef.table), row_id=data["row"], attribute=data["attr"])
            entry = corrections_engine.correct_cell(session, view_id, ref, new_value, actor)
        else:
            entry = corrections_engine.correct_values(session, view_id, attr, old, new_value, actor)
    except ViewCleanError as exc:
        _fail(exc.message)
        return
    _save_session(session, session_path)
    _emit(payloads.correction_payload(entry))


@main.command()
@click.argument("entry_id", type=int)
@click.option("--actor", default="cli", show_default=True)
@click.pass_obj
def undo(session_path: Path, entry_id: int, actor: str) -> None:
    """Revert a correction by its audit entry id."""
    session = _load_session(session_path)
    try:
        compensating = corrections_engine.undo(session, entry_id, actor=actor)
    except ViewCleanError as exc:
        _fail(exc.message)
        return
    _save_session(session, session_path)
    _emit(payloads.correction_payload(compensating))


@main.command()
@click.option("--export", "export_lines", is_flag=True, help="Emit JSON-lines, one entry per line.")
@click.option("--table", default=None)
@click.option("--attribute", default=None)
@click.option("--view", "view_id", default=None)
@click.pass_obj
def history(
    session_path: Path,
    export_lines: bool,
    table: str | None,
    attribute: str | None,
    view_id: str | None,
) -> None:
    """List audit entries, optionally as a JSON-lines export."""
    session = _load_session(session_path)
    entries = corrections_engine.history(session, table=table, attribute=attribute, view=view_id)
    if export_lines:
        for entry in entries:
            sys.stdout.buffer.write(payloads.dump_json(entry.to_wire()) + b"\n")
        return
    _emit(payloads.history_payload(entries))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True)
@click.option("--load", "load_csv_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--id-col", default=None)
@click.option("--name", default=None)
@click.option(
    "--ui-dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
    help="Serve the web UI (a built frontend/ directory) at /.",
)
def serve(
    host: str,
    port: int,
    load_csv_path: Path | None,
    id_col: str | None,
    name: str | None,
    ui_dir: Path | None,
) -> None:
    """Run the HTTP service (optionally pre-seeded with a CSV)."""
    import uvicorn

    from .api import SessionService, create_app

    service = SessionService()
    if load_csv_path is not None:
        session = service.create()
        session.load_table(
            load_csv_path.read_bytes(), name=name or load_csv_path.stem, id_attribute=id_col
        )
        click.echo(f"seeded session {session.id} with table {name or load_csv_path.stem!r}", err=True)
    app = create_app(service, ui_dir=str(ui_dir) if ui_dir else None)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":  # pragma: no cover
    main()
