"""Tabular storage with stable row identity and CSV ingestion.

Values are exact strings or NULL (``None``); nothing is trimmed, case-folded
or type-inferred at ingest, because every cell is potentially correctable
text.  Row ids are assigned once at ingest and never change: corrections
rewrite cell values in place and never insert or delete rows, so the sorted
row order of a table is computed once and reused by every scan.

Row ids are ``int`` when they come from a sequence counter or from an id
column whose values are all canonical integers (``str(int(v)) == v``), and
``str`` otherwise.  A table never mixes the two, which keeps "ascending
row-id order" well defined (numeric for int tables, lexicographic for
string tables).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, TYPE_CHECKING, Iterator, Union

from .errors import ConditionError, IngestError, ParseError

if TYPE_CHECKING:
    from .views import ViewCondition

CellValue = Union[str, None]
RowId = Union[int, str]


def now_iso() -> str:
    """Current UTC time as an ISO-8601 string (single source for timestamps)."""
    return datetime.now(timezone.utc).isoformat()


@dataclass
class Row:
    """One tuple: a stable id plus one value slot per table attribute."""

    row_id: RowId
    values: dict[str, CellValue]


@dataclass(frozen=True)
class CellRef:
    """Address of a single cell: (table, row id, attribute)."""

    table: str
    row_id: RowId
    attribute: str

    def to_wire(self) -> dict:
        return {"table": self.table, "row": self.row_id, "attr": self.attribute}


@dataclass
class Table:
    """Named attribute list plus rows keyed by stable row id."""

    name: str
    attributes: list[str]
    rows: dict[RowId, Row] = field(default_factory=dict)
    _sorted_ids: list[RowId] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if len(set(self.attributes)) != len(self.attributes):
            raise IngestError(f"duplicate attribute names in table {self.name!r}")
        if not self._sorted_ids:
            self._sorted_ids = sorted(self.rows)

    def sorted_ids(self) -> list[RowId]:
        return self._sorted_ids

    def iter_rows(self) -> Iterator[Row]:
        """Rows in ascending row-id order."""
        for rid in self._sorted_ids:
            yield self.rows[rid]

    def has_attribute(self, attribute: str) -> bool:
        return attribute in self.attributes

    def get_row(self, row_id: RowId) -> Row | None:
        return self.rows.get(row_id)

    def resolve_row_id(self, raw: RowId) -> RowId | None:
        """Normalize an externally supplied row id to this table's id type.

        Accepts the table's native type directly and coerces across the
        int/str divide when unambiguous (``7`` matches ``"7"`` and vice
        versa). Returns None when no row matches.
        """
        if raw in self.rows:
            return raw
        if isinstance(raw, str) and raw.lstrip("-").isdigit():
            as_int = int(raw)
            if as_int in self.rows:
                return as_int
        if isinstance(raw, int) and str(raw) in self.rows:
            return str(raw)
        return None

    def state_payload(self) -> dict:
        """Canonical JSON-ready view of the table contents.

        Used for byte-for-byte state comparisons (changelog replay, undo
        round-trips) and for snapshots. Rows serialize as [id, values]
        pairs in ascending id order so int and str ids survive the trip.
        """
        return {
            "name": self.name,
            "attributes": list(self.attributes),
            "rows": [
                [rid, {a: self.rows[rid].values[a] for a in self.attributes}]
                for rid in self._sorted_ids
            ],
        }

    @classmethod
    def from_state_payload(cls, payload: dict) -> Table:
        rows = {}
        for rid, values in payload["rows"]:
            rows[rid] = Row(row_id=rid, values=dict(values))
        return cls(name=payload["name"], attributes=list(payload["attributes"]), rows=rows)


def _decode_source(source: bytes | str | IO[bytes] | IO[str]) -> str:
    if isinstance(source, bytes):
        raw: bytes | str = source
    elif isinstance(source, str):
        raw = source
    else:
        raw = source.read()
    if isinstance(raw, bytes):
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"CSV is not valid UTF-8: {exc}") from None
    return raw


def load_csv(
    source: bytes | str | IO[bytes] | IO[str],
    *,
    name: str = "table",
    has_header: bool = True,
    id_attribute: str | None = None,
) -> Table:
    """Parse an RFC 4180 CSV into a Table.

    Empty fields become NULL. Row ids come from ``id_attribute`` when given
    (values must be unique), otherwise from a 1-based sequence counter.
    Raises ParseError (with a line number) for malformed CSV and IngestError
    for id problems.
    """
    text = _decode_source(source)
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        records = list(reader)
    except csv.Error as exc:
        raise ParseError(f"malformed CSV at line {reader.line_num}: {exc}") from None

    # Trailing blank line from a final CRLF is not a record.
    while records and records[-1] == []:
        records.pop()
    if not records:
        raise ParseError("malformed CSV at line 1: no header record")

    if has_header:
        attributes = records[0]
        data_records = records[1:]
        first_data_line = 2
    else:
        width = len(records[0])
        attributes = [f"c{i}" for i in range(1, width + 1)]
        data_records = records
        first_data_line = 1

    if len(set(attributes)) != len(attributes):
        raise IngestError(f"duplicate attribute names in header: {attributes}")
    if id_attribute is not None and id_attribute not in attributes:
        raise IngestError(f"id attribute {id_attribute!r} not in header")

    width = len(attributes)
    parsed_rows: list[dict[str, CellValue]] = []
    for offset, record in enumerate(data_records):
        line_num = first_data_line + offset
        if len(record) != width:
            raise ParseError(
                f"malformed CSV at line {line_num}: expected {width} fields, got {len(record)}"
            )
        parsed_rows.append(
            {attr: (value if value != "" else None) for attr, value in zip(attributes, record)}
        )

    rows: dict[RowId, Row] = {}
    if id_attribute is None:
        for seq, values in enumerate(parsed_rows, start=1):
            rows[seq] = Row(row_id=seq, values=values)
    else:
        raw_ids: list[str] = []
        for i, values in enumerate(parsed_rows):
            rid = values[id_attribute]
            if rid is None:
                raise IngestError(f"NULL id in column {id_attribute!r} at line {first_data_line + i}")
            raw_ids.append(rid)
        as_int = all(v.lstrip("-").isdigit() and str(int(v)) == v for v in raw_ids)
        for i, values in enumerate(parsed_rows):
            rid: RowId = int(raw_ids[i]) if as_int else raw_ids[i]
            if rid in rows:
                raise IngestError(f"duplicate id {raw_ids[i]!r} in column {id_attribute!r}")
            rows[rid] = Row(row_id=rid, values=values)

    return Table(name=name, attributes=attributes, rows=rows)


def export_csv(table: Table) -> bytes:
    """Serialize a table back to CSV (header + rows in ascending id order).

    NULL renders as an empty field; all other values are written verbatim,
    so a fresh load/export round trip is record-equivalent.
    """
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(table.attributes)
    for row in table.iter_rows():
        writer.writerow(["" if row.values[a] is None else row.values[a] for a in table.attributes])
    return buf.getvalue().encode("utf-8")


def scan(table: Table, condition: "ViewCondition | None" = None) -> list[Row]:
    """Rows satisfying ``condition`` in ascending row-id order (no condition: all)."""
    if condition is None:
        return list(table.iter_rows())
    for atom in condition.atoms:
        if not table.has_attribute(atom.attribute):
            raise ConditionError(
                f"unknown attribute {atom.attribute!r} in table {table.name!r}",
                detail={"attribute": atom.attribute},
            )
    return [row for row in table.iter_rows() if condition.matches(row)]

