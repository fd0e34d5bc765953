"""Functional-dependency tooling: violation checks, discovery, repair hints.

Discovery is a level-wise search over the attribute lattice using stripped
partitions (equivalence classes with singletons dropped): partitions for
attribute sets are built by pairwise products, a candidate lhs is skipped
once any subset already determines the rhs, and a dependency X -> A is
valid when no class of the X-partition holds two distinct non-NULL A
values.  This keeps the search polynomial per level on desk-scale tables
while reporting exactly the minimal dependencies.

NULL handling is uniform across every operation here: a row with NULL in
any dependency attribute (lhs or rhs) is excluded from evaluation and
surfaces only in the report's ``not_evaluated`` count.

Repair is suggestion-only.  For a single dependency the plurality rule
(keep a most frequent rhs value per lhs class) is exactly optimal; with
several dependencies the repair iterates to a fixpoint and is flagged as
uncertified, since the exact joint problem is NP-hard.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .errors import ParseError, SchemaError
from .model import CellRef, Row, RowId, Table

WILDCARD = "_"


@dataclass(frozen=True)
class FD:
    """X -> Y: rows agreeing on every lhs attribute must agree on the rhs."""

    lhs: tuple[str, ...]
    rhs: str

    def __post_init__(self) -> None:
        if self.rhs in self.lhs:
            raise SchemaError(f"rhs {self.rhs!r} may not appear in the lhs")
        if not self.lhs:
            raise SchemaError("lhs must name at least one attribute")

    def attributes(self) -> tuple[str, ...]:
        return self.lhs + (self.rhs,)

    def text(self) -> str:
        return f"{', '.join(self.lhs)} -> {self.rhs}"


@dataclass(frozen=True)
class CFD:
    """An FD constrained to rows matching pattern tuples of constants and '_'."""

    embedded: FD
    tableau: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.tableau:
            raise SchemaError("CFD tableau must contain at least one pattern tuple")
        width = len(self.embedded.lhs) + 1
        for pattern in self.tableau:
            if len(pattern) != width:
                raise SchemaError(
                    f"pattern {pattern!r} must cover lhs attributes plus rhs ({width} positions)"
                )

    def text(self) -> str:
        patterns = "; ".join(f"({', '.join(p)})" for p in self.tableau)
        return f"{self.embedded.text()} :: {patterns}"


@dataclass
class ViolationGroup:
    """Rows sharing one lhs valuation but disagreeing on the rhs.

    ``expected`` is set for constant-rhs CFD patterns, where every listed
    row is a violator; otherwise partitions are the competing rhs values.
    """

    lhs_values: dict[str, str]
    partitions: list[dict]
    expected: str | None = None

    def to_wire(self) -> dict:
        return {"lhs": self.lhs_values, "partitions": self.partitions, "expected": self.expected}


@dataclass
class ViolationReport:
    dependency: str
    table: str
    rhs: str
    groups: list[ViolationGroup] = field(default_factory=list)
    not_evaluated: int = 0

    def is_clean(self) -> bool:
        return not self.groups

    def to_wire(self) -> dict:
        return {
            "dependency": self.dependency,
            "table": self.table,
            "rhs": self.rhs,
            "groups": [g.to_wire() for g in self.groups],
            "not_evaluated": self.not_evaluated,
        }


def _check_schema(table: Table, attributes: Iterable[str]) -> None:
    for attr in attributes:
        if not table.has_attribute(attr):
            raise SchemaError(
                f"unknown attribute {attr!r} in table {table.name!r}", detail={"attribute": attr}
            )


def _sorted_partitions(by_rhs: dict[str, list[RowId]]) -> list[dict]:
    items = sorted(by_rhs.items(), key=lambda kv: (-len(kv[1]), min(kv[1])))
    return [{"value": value, "rows": rows} for value, rows in items]


def check_fd(table: Table, fd: FD, rows: Sequence[Row] | None = None) -> ViolationReport:
    """Group rows by lhs valuation and report classes with >1 distinct rhs value."""
    _check_schema(table, fd.attributes())
    source = list(table.iter_rows()) if rows is None else list(rows)
    report = ViolationReport(dependency=fd.text(), table=table.name, rhs=fd.rhs)
    groups: dict[tuple[str, ...], dict[str, list[RowId]]] = {}
    group_order: list[tuple[str, ...]] = []
    for row in source:
        values = [row.values.get(a) for a in fd.attributes()]
        if any(v is None for v in values):
            report.not_evaluated += 1
            continue
        key = tuple(values[:-1])
        if key not in groups:
            groups[key] = {}
            group_order.append(key)
        groups[key].setdefault(values[-1], []).append(row.row_id)
    for key in group_order:
        by_rhs = groups[key]
        if len(by_rhs) > 1:
            report.groups.append(
                ViolationGroup(
                    lhs_values=dict(zip(fd.lhs, key)),
                    partitions=_sorted_partitions(by_rhs),
                )
            )
    return report


# -- discovery via stripped partitions ---------------------------------------


def _stripped_partition(table: Table, rows: list[Row], attribute: str) -> list[list[int]]:
    """Equivalence classes (row positions) by attribute value, singletons and NULLs dropped."""
    classes: dict[str, list[int]] = {}
    for pos, row in enumerate(rows):
        value = row.values.get(attribute)
        if value is None:
            continue
        classes.setdefault(value, []).append(pos)
    return [cls for cls in classes.values() if len(cls) > 1]


def _partition_product(left: list[list[int]], right: list[list[int]], n_rows: int) -> list[list[int]]:
    """Stripped partition of the attribute-set union, via the probe-table product."""
    probe = [-1] * n_rows
    for idx, cls in enumerate(left):
        for pos in cls:
            probe[pos] = idx
    merged: dict[tuple[int, int], list[int]] = {}
    for idx, cls in enumerate(right):
        for pos in cls:
            if probe[pos] >= 0:
                merged.setdefault((probe[pos], idx), []).append(pos)
    return [cls for cls in merged.values() if len(cls) > 1]


def _fd_holds(partition: list[list[int]], rows: list[Row], rhs: str) -> bool:
    """True when no class carries two distinct non-NULL rhs values."""
    for cls in partition:
        seen: str | None = None
        for pos in cls:
            value = rows[pos].values.get(rhs)
            if value is None:
                continue
            if seen is None:
                seen = value
            elif value != seen:
                return False
    return True


def discover_fds(table: Table, max_lhs_size: int) -> list[FD]:
    """All minimal FDs with |lhs| <= max_lhs_size holding exactly on the table."""
    if max_lhs_size < 1:
        raise SchemaError("max_lhs_size must be >= 1")
    rows = list(table.iter_rows())
    attrs = list(table.attributes)
    n = len(rows)
    cache: dict[frozenset, list[list[int]]] = {
        frozenset((a,)): _stripped_partition(table, rows, a) for a in attrs
    }

    def partition_for(attr_set: tuple[str, ...]) -> list[list[int]]:
        key = frozenset(attr_set)
        if key not in cache:
            head = partition_for(attr_set[:-1])
            tail = cache[frozenset((attr_set[-1],))]
            cache[key] = _partition_product(head, tail, n)
        return cache[key]

    found: list[FD] = []
    for rhs in attrs:
        others = [a for a in attrs if a != rhs]
        minimal_for_rhs: list[frozenset] = []
        for size in range(1, min(max_lhs_size, len(others)) + 1):
            for lhs in combinations(others, size):
                lhs_set = frozenset(lhs)
                if any(prev <= lhs_set for prev in minimal_for_rhs):
                    continue
                if _fd_holds(partition_for(lhs), rows, rhs):
                    minimal_for_rhs.append(lhs_set)
                    found.append(FD(lhs=lhs, rhs=rhs))
    return found


# -- repair suggestion --------------------------------------------------------


@dataclass
class RemovalSuggestion:
    rows: list[RowId]
    certified_optimal: bool

    def to_wire(self) -> dict:
        return {"remove": self.rows, "certified_optimal": self.certified_optimal}


def _plurality_removals(table: Table, fd: FD, rows: list[Row]) -> set[RowId]:
    """Rows outside the kept partition of each violating class.

    The kept partition is a largest one; among equally large partitions the
    one containing the smallest row id is kept, so the result is
    deterministic.
    """
    report = check_fd(table, fd, rows)
    removals: set[RowId] = set()
    for group in report.groups:
        partitions = group.partitions
        best_size = len(partitions[0]["rows"])
        candidates = [p for p in partitions if len(p["rows"]) == best_size]
        keep = min(candidates, key=lambda p: min(p["rows"]))
        for partition in partitions:
            if partition is not keep:
                removals.update(partition["rows"])
    return removals


def minimal_removal(table: Table, fds: Sequence[FD], rows: Sequence[Row] | None = None) -> RemovalSuggestion:
    """Rows whose removal makes all dependencies hold.

    Exactly optimal (and certified) for a single FD via the plurality rule;
    for several FDs the plurality repair iterates to a fixpoint and the
    result is an uncertified approximation.
    """
    for fd in fds:
        _check_schema(table, fd.attributes())
    remaining = list(table.iter_rows()) if rows is None else list(rows)
    removed: set[RowId] = set()
    while True:
        round_removals: set[RowId] = set()
        for fd in fds:
            round_removals |= _plurality_removals(table, fd, remaining)
        if not round_removals:
            break
        removed |= round_removals
        remaining = [r for r in remaining if r.row_id not in round_removals]
    return RemovalSuggestion(rows=sorted(removed), certified_optimal=len(fds) == 1)


# -- conditional functional dependencies --------------------------------------


def check_cfd(table: Table, cfd: CFD, rows: Sequence[Row] | None = None) -> ViolationReport:
    """Evaluate each pattern tuple of the tableau against the rows.

    A row matches a pattern when it equals every lhs constant (wildcards
    bind nothing).  A constant rhs pattern is violated by any matching row
    holding a different value; a wildcard rhs behaves like the embedded FD
    restricted to the matching rows.
    """
    fd = cfd.embedded
    _check_schema(table, fd.attributes())
    source = list(table.iter_rows()) if rows is None else list(rows)
    report = ViolationReport(dependency=cfd.text(), table=table.name, rhs=fd.rhs)

    skipped: set[RowId] = set()
    for pattern in cfd.tableau:
        lhs_pattern = dict(zip(fd.lhs, pattern[:-1]))
        rhs_pattern = pattern[-1]
        matching: list[Row] = []
        for row in source:
            values = [row.values.get(a) for a in fd.attributes()]
            if any(v is None for v in values):
                skipped.add(row.row_id)
                continue
            if all(
                constant == WILDCARD or row.values[attr] == constant
                for attr, constant in lhs_pattern.items()
            ):
                matching.append(row)

        if rhs_pattern != WILDCARD:
            violators: dict[str, list[RowId]] = {}
            for row in matching:
                actual = row.values[fd.rhs]
                if actual != rhs_pattern:
                    violators.setdefault(actual, []).append(row.row_id)
            if violators:
                report.groups.append(
                    ViolationGroup(
                        lhs_values=dict(lhs_pattern),
                        partitions=_sorted_partitions(violators),
                        expected=rhs_pattern,
                    )
                )
        else:
            classes: dict[tuple[str, ...], dict[str, list[RowId]]] = {}
            order: list[tuple[str, ...]] = []
            for row in matching:
                key = tuple(row.values[a] for a in fd.lhs)
                if key not in classes:
                    classes[key] = {}
                    order.append(key)
                classes[key].setdefault(row.values[fd.rhs], []).append(row.row_id)
            for key in order:
                by_rhs = classes[key]
                if len(by_rhs) > 1:
                    report.groups.append(
                        ViolationGroup(
                            lhs_values=dict(zip(fd.lhs, key)),
                            partitions=_sorted_partitions(by_rhs),
                        )
                    )
    report.not_evaluated = len(skipped)
    return report


def violations_to_marks(report: ViolationReport) -> set[CellRef]:
    """Suspect rhs cells implied by a report.

    Constant-pattern groups mark every listed row.  Dependency groups mark
    the minority partitions; when the plurality ties, every partition is
    minority-eligible and all rows are marked.
    """
    cells: set[CellRef] = set()
    for group in report.groups:
        if group.expected is not None:
            for partition in group.partitions:
                for row_id in partition["rows"]:
                    cells.add(CellRef(table=report.table, row_id=row_id, attribute=report.rhs))
            continue
        sizes = [len(p["rows"]) for p in group.partitions]
        best = max(sizes)
        tie = sizes.count(best) > 1
        for partition in group.partitions:
            if tie or len(partition["rows"]) != best:
                for row_id in partition["rows"]:
                    cells.add(CellRef(table=report.table, row_id=row_id, attribute=report.rhs))
    return cells


# -- text forms ----------------------------------------------------------------

_FD_RE = re.compile(r"^\s*(?P<lhs>[^>]+?)\s*->\s*(?P<rhs>[^:]+?)\s*$")
_CFD_RE = re.compile(r"^\s*(?P<fd>.+?)\s*::\s*(?P<tableau>.+)\s*$")
_PATTERN_RE = re.compile(r"\(([^()]*)\)")


def parse_fd(text: str) -> FD:
    """Parse "A, B -> C"."""
    match = _FD_RE.match(text)
    if not match:
        raise ParseError(f"cannot parse dependency {text!r} (expected 'X -> Y')")
    lhs = tuple(part.strip() for part in match.group("lhs").split(","))
    rhs = match.group("rhs").strip()
    if not all(lhs) or not rhs:
        raise ParseError(f"cannot parse dependency {text!r}: empty attribute name")
    return FD(lhs=lhs, rhs=rhs)


def parse_cfd(text: str) -> CFD:
    """Parse "A -> B :: (a1, _); (a2, b2)" — one parenthesized tuple per pattern."""
    match = _CFD_RE.match(text)
    if not match:
        raise ParseError(f"cannot parse CFD {text!r} (expected 'X -> Y :: (pattern)')")
    fd = parse_fd(match.group("fd"))
    raw_patterns = _PATTERN_RE.findall(match.group("tableau"))
    if not raw_patterns:
        raise ParseError(f"cannot parse CFD {text!r}: no pattern tuples found")
    tableau = tuple(
        tuple(part.strip() for part in raw.split(",")) for raw in raw_patterns
    )
    return CFD(embedded=fd, tableau=tableau)
