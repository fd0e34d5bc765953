// HTML renderers: pure functions from workbench state to markup strings.
// Interactive elements carry data-action attributes; app.ts wires them via
// event delegation, so these stay testable without a DOM.

import { cellKey, conditionLabel, type WorkbenchState } from "./state.js";
import type { AuditEntryInfo, CellAddress, Suggestion, ViewInfo } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function attr(value: string): string {
  return escapeHtml(value);
}

export function renderGrid(state: WorkbenchState): string {
  const { grid } = state;
  if (!grid.table || !grid.page || !grid.activeView) {
    return '<p class="hint">Upload a CSV to begin.</p>';
  }
  const selectedKeys = new Set(grid.selected.map(cellKey));
  const markedKeys = new Set(
    grid.page.marked_cells.map((m) =>
      cellKey({ table: grid.table as string, row: m.row, attr: m.attr }),
    ),
  );
  const header = grid.attributes.map((a) => `<th>${escapeHtml(a)}</th>`).join("");
  const body = grid.page.rows
    .map((row) => {
      const cells = grid.attributes
        .map((attribute) => {
          const cell: CellAddress = { table: grid.table as string, row: row.id, attr: attribute };
          const key = cellKey(cell);
          const classes = [
            markedKeys.has(key) ? "marked" : "",
            selectedKeys.has(key) ? "selected" : "",
          ]
            .filter(Boolean)
            .join(" ");
          const value = row.values[attribute];
          const shown = value === null || value === undefined ? "" : value;
          return (
            `<td class="${classes}" data-action="toggle-cell" data-row="${attr(String(row.id))}"` +
            ` data-attr="${attr(attribute)}" data-value="${attr(shown)}">` +
            (value === null ? '<span class="null">NULL</span>' : escapeHtml(shown)) +
            "</td>"
          );
        })
        .join("");
      return `<tr><td class="rowid">${escapeHtml(String(row.id))}</td>${cells}</tr>`;
    })
    .join("");
  const upper = Math.min(grid.offset + grid.page.rows.length, grid.page.total_count);
  return `
<table class="grid">
  <thead><tr><th class="rowid">id</th>${header}</tr></thead>
  <tbody>${body}</tbody>
</table>
<div class="pager">
  <button data-action="prev-page" ${grid.offset === 0 ? "disabled" : ""}>&#8592; prev</button>
  <span>rows ${grid.page.total_count === 0 ? 0 : grid.offset + 1}&ndash;${upper} of ${grid.page.total_count}</span>
  <button data-action="next-page" ${upper >= grid.page.total_count ? "disabled" : ""}>next &#8594;</button>
</div>`;
}

export function renderBreadcrumb(lineage: ViewInfo[], activeId: string | null): string {
  if (lineage.length === 0) {
    return "";
  }
  const crumbs = lineage.map((view) => {
    const label = `${view.derivation}: ${conditionLabel(view.condition)}`;
    const current = view.id === activeId ? ' class="current"' : "";
    return `<a${current} data-action="open-lineage-view" data-view="${attr(view.id)}">${escapeHtml(label)}</a>`;
  });
  return `<nav class="breadcrumb">${crumbs.join(" &#8250; ")}</nav>`;
}

export function renderAtomChips(view: ViewInfo | null): string {
  if (!view || view.condition.atoms.length === 0) {
    return '<span class="hint">whole table</span>';
  }
  return view.condition.atoms
    .map(
      (a, i) =>
        `<span class="chip">${escapeHtml(`${a.attr} ${a.op} '${a.value}'`)}` +
        `<button data-action="drop-atom" data-index="${i}" title="relax: drop this atom">&#215;</button></span>`,
    )
    .join("");
}

export function renderSuggestions(suggestions: Suggestion[]): string {
  if (suggestions.length === 0) {
    return '<p class="hint">Mark cells, then ask for suggestions.</p>';
  }
  const items = suggestions
    .slice(0, 8)
    .map(
      (s) =>
        `<li><button data-action="accept-suggestion" data-rank="${s.rank}">open</button> ` +
        `<code>${escapeHtml(conditionLabel(s.condition))}</code>` +
        ` <span class="meta">${s.rows} rows, ${s.extra} beyond marks</span></li>`,
    )
    .join("");
  return `<ol class="suggestions">${items}</ol>`;
}

export function renderDraft(state: WorkbenchState): string {
  const draft = state.grid.draft;
  if (!draft) {
    return '<p class="hint">Click a cell, then "batch correct" to draft a correction.</p>';
  }
  const preview =
    draft.previewCount === null
      ? ""
      : `<span class="meta">${draft.previewCount} cell(s) will change</span>`;
  return `
<div class="draft">
  <code>${escapeHtml(draft.attribute)}: '${escapeHtml(draft.oldValue)}' &#8594;</code>
  <input data-action="draft-input" value="${attr(draft.newValue)}" placeholder="replacement value" />
  <button data-action="preview-draft">preview</button>
  <button data-action="submit-draft" ${draft.previewCount === null ? "disabled" : ""}>apply</button>
  ${preview}
</div>`;
}

export function renderHistory(entries: AuditEntryInfo[]): string {
  if (entries.length === 0) {
    return '<p class="hint">No corrections yet.</p>';
  }
  const items = [...entries]
    .reverse()
    .map((entry) => {
      const summary = `#${entry.id} ${entry.actor}: ${entry.changes.length} change(s)` +
        (entry.undo_of !== null ? ` (undo of #${entry.undo_of})` : "");
      const undoButton = entry.undone
        ? '<span class="meta">undone</span>'
        : `<button data-action="undo-entry" data-entry="${entry.id}">undo</button>`;
      return `<li>${escapeHtml(summary)} ${undoButton}</li>`;
    })
    .join("");
  return `<ul class="history">${items}</ul>`;
}

export function renderVariants(state: WorkbenchState): string {
  const variants = state.variants;
  const options = state.grid.attributes
    .map((a) => `<option value="${attr(a)}">${escapeHtml(a)}</option>`)
    .join("");
  const picker = `
<div class="variant-picker">
  <select data-action="variant-attr">${options}</select>
  <button data-action="detect-variants">detect variants</button>
</div>`;
  if (!variants) {
    return picker;
  }
  if (variants.groups.length === 0) {
    return `${picker}<p class="hint">No variant groups found.</p>`;
  }
  const groups = variants.groups
    .map((group) => {
      const members = group.members
        .map((m) => `<code>${escapeHtml(m.value)}</code> (${m.rows.length})`)
        .join(", ");
      return `<li><strong>${escapeHtml(group.attribute)}</strong>: ${members}</li>`;
    })
    .join("");
  const accept =
    variants.proposed_marks.length > 0
      ? `<button data-action="accept-variant-proposal">mark ${variants.proposed_marks.length} proposed cell(s)</button>`
      : "";
  return `${picker}<ul class="variants">${groups}</ul>${accept}`;
}

export function renderStatus(state: WorkbenchState): string {
  if (state.error) {
    return `<div class="error">${escapeHtml(state.error)}</div>`;
  }
  if (state.busy) {
    return '<div class="busy">working&hellip;</div>';
  }
  return "";
}

export function renderApp(state: WorkbenchState): string {
  const selected = state.grid.selected.length;
  return `
${renderStatus(state)}
<section class="toolbar">
  ${renderBreadcrumb(state.lineage, state.grid.activeView?.id ?? null)}
  <div class="chips">${renderAtomChips(state.grid.activeView)}</div>
  <div class="actions">
    <button data-action="mark-selected" ${selected === 0 ? "disabled" : ""}>mark ${selected} cell(s)</button>
    <button data-action="suggest-views" ${state.lastMarkSet ? "" : "disabled"}>suggest views</button>
    <button data-action="batch-from-selection" ${selected === 0 ? "disabled" : ""}>batch correct</button>
  </div>
</section>
<section class="main">
  <div class="grid-pane">${renderGrid(state)}${renderDraft(state)}</div>
  <aside class="side">
    <h3>Suggested views</h3>${renderSuggestions(state.suggestions)}
    <h3>Variants</h3>${renderVariants(state)}
    <h3>History</h3>${renderHistory(state.history)}
  </aside>
</section>`;
}
