// Wire shapes exchanged with the viewclean HTTP service. These mirror the
// server's JSON exactly; the UI never invents fields of its own here.

export type CellValue = string | null;
export type RowId = number | string;

export interface Atom {
  attr: string;
  op: "equals" | "equals_ci" | "contains";
  value: string;
}

export interface Condition {
  atoms: Atom[];
}

export interface CellAddress {
  table: string;
  row: RowId;
  attr: string;
}

export interface SessionInfo {
  id: string;
  created_at: string;
  tables: TableInfo[];
  views: number;
  marks: number;
  audit_entries: number;
}

export interface TableInfo {
  table: string;
  attributes: string[];
  rows: number;
}

export interface WireRow {
  id: RowId;
  values: Record<string, CellValue>;
}

export interface MarkedCell {
  row: RowId;
  attr: string;
  sets: string[];
}

export interface RowsPage {
  rows: WireRow[];
  total_count: number;
  marked_cells: MarkedCell[];
}

export interface ViewInfo {
  id: string;
  table: string;
  condition: Condition;
  parent: string | null;
  derivation: "root" | "refine" | "relax" | "from_marks";
  rows: number;
  empty: boolean;
}

export interface LineageResponse {
  chain: ViewInfo[];
}

export interface MarkSetInfo {
  id: string;
  label: string | null;
  origin: string;
  created_at: string;
  cells: CellAddress[];
}

export interface Suggestion {
  condition: Condition;
  rows: number;
  extra: number;
  atoms: number;
  rank: number;
}

export interface SuggestionsResponse {
  mark_set: string;
  suggestions: Suggestion[];
}

export interface Change {
  row: RowId;
  attr: string;
  old: CellValue;
  new: CellValue;
}

export interface AuditEntryInfo {
  id: number;
  view: string;
  actor: string;
  ts: string;
  changes: Change[];
  undone: boolean;
  undo_of: number | null;
  touched_marks?: MarkedCell[];
}

export interface HistoryResponse {
  entries: AuditEntryInfo[];
}

export interface PreviewResponse {
  preview: true;
  view: string;
  changes: Change[];
  touched_marks: MarkedCell[];
}

export interface VariantMember {
  value: string;
  rows: RowId[];
}

export interface VariantGroupInfo {
  table: string;
  attribute: string;
  key: string;
  members: VariantMember[];
}

export interface VariantsResponse {
  groups: VariantGroupInfo[];
  proposed_marks: CellAddress[];
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
    detail: unknown;
  };
}
