"""Exception hierarchy shared by the engine, API, and CLI.

Every error carries a machine-readable ``code`` and an optional ``detail``
mapping so the HTTP layer can render a uniform error body and the CLI can
exit with a meaningful diagnostic.
"""

from __future__ import annotations

from typing import Any


class ViewCleanError(Exception):
    """Base class for all operational errors raised by this package."""

    code = "error"

    def __init__(self, message: str, detail: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.detail = detail or {}


class ParseError(ViewCleanError):
    """Malformed input document (CSV, condition JSON, dependency text)."""

    code = "parse_error"


class IngestError(ViewCleanError):
    """CSV was well-formed but violates ingest preconditions (e.g. duplicate ids)."""

    code = "ingest_error"


class ConditionError(ViewCleanError):
    """A view condition references an unknown attribute or is otherwise invalid."""

    code = "condition_error"


class SchemaError(ViewCleanError):
    """A dependency or detector references attributes missing from the table."""

    code = "schema_error"


class NotFoundError(ViewCleanError):
    """An id (session, table, mark set, view, audit entry) does not resolve."""

    code = "not_found"


class AmbiguousIdError(ViewCleanError):
    """An id resolves in more than one session and no session was specified."""

    code = "ambiguous_id"


class LineageError(ViewCleanError):
    """A refine/relax derivation violates the parent/child atom relationship."""

    code = "lineage_error"


class ScopeError(ViewCleanError):
    """A correction targets a cell whose row is not in the scoping view."""

    code = "scope_error"


class ConflictError(ViewCleanError):
    """Undo refused: an intervening edit changed one of the entry's cells."""

    code = "conflict"


class StateError(ViewCleanError):
    """Operation not valid for the target's current state (e.g. double undo)."""

    code = "state_error"


class RestoreError(ViewCleanError):
    """A snapshot stream is corrupt or truncated; no session was built."""

    code = "restore_error"


class ValidationError(ViewCleanError):
    """A request body or argument does not match the expected wire shape."""

    code = "validation"
