"""Interactive view-based data cleaning workbench.

The cleaning loop has three operations: mark suspect cells, derive an
updatable selection view covering them, and correct values through the
view.  Rule-based detection (functional dependencies, value variants) feeds
the marking step; condition synthesis feeds the view step; every correction
is audited and undoable.
"""

from .corrections import (
    AuditEntry,
    CellChange,
    SubstitutionRule,
    correct_cell,
    correct_values,
    history,
    suggest_from_history,
    undo,
)
from .errors import ViewCleanError
from .fd import CFD, FD, check_cfd, check_fd, discover_fds, minimal_removal, parse_cfd, parse_fd, violations_to_marks
from .marking import MarkSet, mark_cells, marks_in_view, unmark
from .model import CellRef, Row, Table, export_csv, load_csv, scan
from .session import Session
from .suggest import SuggestionParams, candidate_atoms, suggest_views
from .variants import NormalizationPolicy, VariantGroup, find_variant_groups, normalize, propose_marks
from .views import (
    ConditionAtom,
    ViewCondition,
    ViewDef,
    create_view,
    evaluate_view,
    refine_view,
    relax_view,
    view_lineage,
)

__version__ = "0.1.0"

__all__ = [
    "AuditEntry",
    "CFD",
    "CellChange",
    "CellRef",
    "ConditionAtom",
    "FD",
    "MarkSet",
    "NormalizationPolicy",
    "Row",
    "Session",
    "SubstitutionRule",
    "SuggestionParams",
    "Table",
    "VariantGroup",
    "ViewCondition",
    "ViewDef",
    "ViewCleanError",
    "candidate_atoms",
    "check_cfd",
    "check_fd",
    "correct_cell",
    "correct_values",
    "create_view",
    "discover_fds",
    "evaluate_view",
    "export_csv",
    "find_variant_groups",
    "history",
    "load_csv",
    "mark_cells",
    "marks_in_view",
    "minimal_removal",
    "normalize",
    "parse_cfd",
    "parse_fd",
    "propose_marks",
    "refine_view",
    "relax_view",
    "scan",
    "suggest_from_history",
    "suggest_views",
    "undo",
    "unmark",
    "view_lineage",
    "violations_to_marks",
]
