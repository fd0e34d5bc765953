// Browser bootstrap: owns the DOM, delegates events to workbench actions,
// re-renders on every state notification. All data flows through the API
// client; nothing here mutates state except via Workbench methods.

import { ApiClient } from "./api.js";
import { renderApp } from "./render.js";
import { Workbench } from "./state.js";

const api = new ApiClient(""); // same origin; `viewclean serve --ui-dir` hosts both
const workbench = new Workbench(api);

const root = document.getElementById("app") as HTMLElement;

workbench.subscribe((state) => {
  const focused = document.activeElement as HTMLInputElement | null;
  const keepDraftFocus = focused?.dataset?.action === "draft-input";
  root.innerHTML = renderApp(state);
  if (keepDraftFocus) {
    const input = root.querySelector<HTMLInputElement>('[data-action="draft-input"]');
    if (input) {
      input.focus();
      input.setSelectionRange(input.value.length, input.value.length);
    }
  }
});

function selectedVariantAttr(): string {
  const select = root.querySelector<HTMLSelectElement>('[data-action="variant-attr"]');
  return select?.value ?? workbench.state.grid.attributes[0] ?? "";
}

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!target) {
    return;
  }
  const action = target.dataset.action;
  switch (action) {
    case "toggle-cell":
      workbench.toggleSelect(target.dataset.row ?? "", target.dataset.attr ?? "");
      break;
    case "mark-selected":
      void workbench.markSelected(prompt("Label for this mark set?") ?? undefined);
      break;
    case "suggest-views":
      void workbench.suggestViews();
      break;
    case "accept-suggestion":
      void workbench.acceptSuggestion(Number(target.dataset.rank));
      break;
    case "batch-from-selection": {
      const first = workbench.state.grid.selected[0];
      const page = workbench.state.grid.page;
      if (first && page) {
        const row = page.rows.find((r) => String(r.id) === String(first.row));
        const value = row?.values[first.attr] ?? "";
        workbench.draftBatchFrom(first.attr, value ?? "");
      }
      break;
    }
    case "preview-draft":
      void workbench.previewDraft();
      break;
    case "submit-draft":
      void workbench.submitDraft();
      break;
    case "drop-atom":
      void workbench.relaxDropAtom(Number(target.dataset.index));
      break;
    case "open-lineage-view":
      void workbench.openLineageView(target.dataset.view ?? "");
      break;
    case "undo-entry":
      void workbench.undoEntry(Number(target.dataset.entry));
      break;
    case "detect-variants":
      void workbench.detectVariants(selectedVariantAttr());
      break;
    case "accept-variant-proposal":
      void workbench.acceptVariantProposal();
      break;
    case "prev-page":
      void workbench.prevPage();
      break;
    case "next-page":
      void workbench.nextPage();
      break;
    default:
      break;
  }
});

root.addEventListener("input", (event) => {
  const target = event.target as HTMLInputElement;
  if (target.dataset.action === "draft-input") {
    workbench.updateDraft(target.value);
  }
});

const uploadForm = document.getElementById("upload-form") as HTMLFormElement;
uploadForm.addEventListener("submit", (event) => {
  event.preventDefault();
  const fileInput = document.getElementById("csv-file") as HTMLInputElement;
  const idColInput = document.getElementById("id-col") as HTMLInputElement;
  const file = fileInput.files?.[0];
  if (!file) {
    return;
  }
  void file.text().then((csv) => {
    const name = file.name.replace(/\.csv$/i, "") || "table";
    return workbench.uploadCsv(name, csv, idColInput.value || undefined);
  });
});

void workbench.start();
