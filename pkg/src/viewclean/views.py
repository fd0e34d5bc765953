"""Updatable selection views: conjunctive conditions with refine/relax lineage.

A view is never materialized.  It is a stored condition (a conjunction of
attribute/comparison atoms) plus a lineage link, and every evaluation runs
against the current base table, so corrections are visible immediately.
Because conditions are pure row selections and every evaluated row carries
its base row id, updating "through" a view is unambiguous by construction.

NULL matches no atom, including negatively: a NULL cell fails ``equals``,
``equals_ci`` and ``contains`` alike.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import ConditionError, LineageError, ValidationError
from .model import Row, Table, scan

if TYPE_CHECKING:
    from .session import Session

ATOM_OPS = ("equals", "equals_ci", "contains")
DERIVATIONS = ("root", "refine", "relax", "from_marks")


@dataclass(frozen=True, order=True)
class ConditionAtom:
    """One comparison against a single attribute."""

    attribute: str
    op: str
    value: str

    def __post_init__(self) -> None:
        if self.op not in ATOM_OPS:
            raise ConditionError(f"unknown condition op {self.op!r}")
        if self.op == "contains" and self.value == "":
            raise ConditionError("contains atom requires a non-empty value")

    def matches(self, row: Row) -> bool:
        cell = row.values.get(self.attribute)
        if cell is None:
            return False
        if self.op == "equals":
            return cell == self.value
        if self.op == "equals_ci":
            return cell.casefold() == self.value.casefold()
        return self.value in cell

    def to_wire(self) -> dict:
        return {"attr": self.attribute, "op": self.op, "value": self.value}

    @classmethod
    def from_wire(cls, data: dict) -> ConditionAtom:
        if not isinstance(data, dict):
            raise ValidationError(f"condition atom must be an object, got {type(data).__name__}")
        missing = {"attr", "op", "value"} - set(data)
        if missing:
            raise ValidationError(f"condition atom missing keys: {sorted(missing)}")
        if not isinstance(data["attr"], str) or not isinstance(data["value"], str):
            raise ValidationError("condition atom attr/value must be strings")
        return cls(attribute=data["attr"], op=data["op"], value=data["value"])


@dataclass(frozen=True)
class ViewCondition:
    """Conjunction of atoms; the empty conjunction selects the whole table."""

    atoms: tuple[ConditionAtom, ...]

    @classmethod
    def of(cls, atoms: Iterable[ConditionAtom]) -> ViewCondition:
        """Build with duplicate atoms dropped and a canonical atom order."""
        return cls(atoms=tuple(sorted(set(atoms))))

    def matches(self, row: Row) -> bool:
        return all(atom.matches(row) for atom in self.atoms)

    def is_empty(self) -> bool:
        return not self.atoms

    def to_wire(self) -> dict:
        return {"atoms": [atom.to_wire() for atom in self.atoms]}

    def text(self) -> str:
        """Canonical serialized form; used as the deterministic tie-break key."""
        return json.dumps(self.to_wire(), separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_wire(cls, data: dict) -> ViewCondition:
        if not isinstance(data, dict) or "atoms" not in data:
            raise ValidationError('condition must be an object with an "atoms" list')
        if not isinstance(data["atoms"], list):
            raise ValidationError('"atoms" must be a list')
        return cls.of(ConditionAtom.from_wire(a) for a in data["atoms"])


@dataclass
class ViewDef:
    """A stored condition over one table plus its derivation lineage."""

    id: str
    table: str
    condition: ViewCondition
    parent: str | None = None
    derivation: str = "root"

    def to_wire(self) -> dict:
        return {
            "id": self.id,
            "table": self.table,
            "condition": self.condition.to_wire(),
            "parent": self.parent,
            "derivation": self.derivation,
        }

    @classmethod
    def from_wire(cls, data: dict) -> ViewDef:
        return cls(
            id=data["id"],
            table=data["table"],
            condition=ViewCondition.from_wire(data["condition"]),
            parent=data.get("parent"),
            derivation=data.get("derivation", "root"),
        )


@dataclass
class ViewEvaluation:
    """One page of a view evaluation against the current base table."""

    rows: list[Row]
    total_count: int
    marked_cells: list[dict]


def _validate_condition(table: Table, condition: ViewCondition) -> None:
    for atom in condition.atoms:
        if not table.has_attribute(atom.attribute):
            raise ConditionError(
                f"unknown attribute {atom.attribute!r} in table {table.name!r}",
                detail={"attribute": atom.attribute},
            )


def create_view(
    session: "Session",
    table: str,
    condition: ViewCondition,
    *,
    derivation: str = "root",
    parent: str | None = None,
) -> ViewDef:
    """Persist a new view over ``table``; evaluation stays virtual."""
    tbl = session.get_table(table)
    _validate_condition(tbl, condition)
    view = ViewDef(
        id=session.next_view_id(),
        table=table,
        condition=condition,
        parent=parent,
        derivation=derivation,
    )
    session.add_view(view)
    return view


def refine_view(session: "Session", parent_view: str, extra_atoms: Iterable[ConditionAtom]) -> ViewDef:
    """Child view whose atoms are the parent's plus ``extra_atoms``."""
    parent = session.get_view(parent_view)
    tbl = session.get_table(parent.table)
    extra = list(extra_atoms)
    _validate_condition(tbl, ViewCondition.of(extra))
    condition = ViewCondition.of(list(parent.condition.atoms) + extra)
    view = ViewDef(
        id=session.next_view_id(),
        table=parent.table,
        condition=condition,
        parent=parent.id,
        derivation="refine",
    )
    session.add_view(view)
    return view


def relax_view(session: "Session", parent_view: str, atoms_to_keep: Iterable[ConditionAtom]) -> ViewDef:
    """Child view keeping a subset of the parent's atoms (empty set = whole table)."""
    parent = session.get_view(parent_view)
    keep = set(atoms_to_keep)
    parent_atoms = set(parent.condition.atoms)
    extraneous = keep - parent_atoms
    if extraneous:
        raise LineageError(
            "atoms to keep must be a subset of the parent view's atoms",
            detail={"unknown_atoms": [a.to_wire() for a in sorted(extraneous)]},
        )
    view = ViewDef(
        id=session.next_view_id(),
        table=parent.table,
        condition=ViewCondition.of(keep),
        parent=parent.id,
        derivation="relax",
    )
    session.add_view(view)
    return view


def evaluate_condition(
    session: "Session",
    table: str,
    condition: ViewCondition,
    *,
    offset: int = 0,
    limit: int | None = None,
) -> ViewEvaluation:
    """One page of rows currently satisfying ``condition``, marks annotated."""
    tbl = session.get_table(table)
    matching = scan(tbl, condition)
    if offset < 0 or (limit is not None and limit < 0):
        raise ValidationError("offset and limit must be non-negative")
    page = matching[offset:] if limit is None else matching[offset : offset + limit]

    marked: list[dict] = []
    page_ids = {row.row_id for row in page}
    for cell, set_ids in session.marked_cells_index(table).items():
        if cell.row_id in page_ids:
            marked.append({"row": cell.row_id, "attr": cell.attribute, "sets": sorted(set_ids)})
    marked.sort(key=lambda m: (m["row"], m["attr"]))
    return ViewEvaluation(rows=page, total_count=len(matching), marked_cells=marked)


def evaluate_view(
    session: "Session",
    view: str | ViewDef,
    *,
    offset: int = 0,
    limit: int | None = None,
) -> ViewEvaluation:
    """Rows currently satisfying the view's condition, with page marks annotated.

    Always computed against the live base table; every prior correction is
    reflected with no refresh step.
    """
    vdef = session.get_view(view) if isinstance(view, str) else view
    return evaluate_condition(session, vdef.table, vdef.condition, offset=offset, limit=limit)


def view_rows(session: "Session", view: str | ViewDef) -> list[Row]:
    """Unpaged evaluation, used by engines that need the full row set."""
    return evaluate_view(session, view).rows


def view_lineage(session: "Session", view: str) -> list[ViewDef]:
    """Ancestor chain from the root view down to ``view`` (inclusive)."""
    chain: list[ViewDef] = []
    seen: set[str] = set()
    current: str | None = view
    while current is not None:
        if current in seen:
            raise LineageError(f"lineage cycle detected at view {current!r}")
        seen.add(current)
        vdef = session.get_view(current)
        chain.append(vdef)
        current = vdef.parent
    chain.reverse()
    return chain


def parse_atoms(data: Sequence[dict]) -> list[ConditionAtom]:
    if not isinstance(data, (list, tuple)):
        raise ValidationError('"atoms" must be a list')
    return [ConditionAtom.from_wire(a) for a in data]
