// Thin typed client for the viewclean service. Every mutation the UI makes
// goes through here; there are no side channels.

import type {
  AuditEntryInfo,
  CellAddress,
  Condition,
  HistoryResponse,
  LineageResponse,
  MarkSetInfo,
  PreviewResponse,
  RowsPage,
  SessionInfo,
  SuggestionsResponse,
  TableInfo,
  VariantsResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, code: string, message: string, detail: unknown) {
    super(message);
    this.status = status;
    this.code = code;
    this.detail = detail;
  }
}

async function parseError(response: Response): Promise<never> {
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  let detail: unknown = null;
  try {
    const body = (await response.json()) as { error?: { code: string; message: string; detail: unknown } };
    if (body.error) {
      code = body.error.code;
      message = body.error.message;
      detail = body.error.detail;
    }
  } catch {
    // non-JSON error body; keep the HTTP status text
  }
  throw new ApiError(response.status, code, message, detail);
}

export class ApiClient {
  readonly baseUrl: string;
  sessionId: string | null = null;

  constructor(baseUrl = "") {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown, raw?: string): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (raw !== undefined) {
      init.body = raw;
      (init.headers as Record<string, string>)["content-type"] = "text/csv";
    } else if (body !== undefined) {
      init.body = JSON.stringify(body);
      (init.headers as Record<string, string>)["content-type"] = "application/json";
    }
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  private withSession(body: Record<string, unknown>): Record<string, unknown> {
    return this.sessionId ? { session: this.sessionId, ...body } : body;
  }

  private sessionQuery(prefix = "?"): string {
    return this.sessionId ? `${prefix}session=${encodeURIComponent(this.sessionId)}` : "";
  }

  async createSession(): Promise<SessionInfo> {
    const info = await this.request<SessionInfo>("POST", "/sessions", {});
    this.sessionId = info.id;
    return info;
  }

  async getSession(id: string): Promise<SessionInfo> {
    return this.request<SessionInfo>("GET", `/sessions/${encodeURIComponent(id)}`);
  }

  async uploadCsv(name: string, csv: string, idAttribute?: string): Promise<TableInfo> {
    if (!this.sessionId) {
      throw new Error("no session; call createSession first");
    }
    const params = new URLSearchParams({ name });
    if (idAttribute) {
      params.set("id_attribute", idAttribute);
    }
    return this.request<TableInfo>(
      "POST",
      `/sessions/${encodeURIComponent(this.sessionId)}/tables?${params.toString()}`,
      undefined,
      csv,
    );
  }

  async tableRows(table: string, offset: number, limit: number): Promise<RowsPage> {
    const params = new URLSearchParams({ offset: String(offset), limit: String(limit) });
    if (this.sessionId) {
      params.set("session", this.sessionId);
    }
    return this.request<RowsPage>("GET", `/tables/${encodeURIComponent(table)}/rows?${params.toString()}`);
  }

  async createView(table: string, condition: Condition): Promise<ViewInfoResponse> {
    return this.request("POST", "/views", this.withSession({ table, atoms: condition.atoms }));
  }

  async createViewFromMarks(markSetId: string, condition?: Condition): Promise<ViewInfoResponse> {
    const body: Record<string, unknown> = { from_marks: markSetId };
    if (condition) {
      body.atoms = condition.atoms;
    }
    return this.request("POST", "/views", this.withSession(body));
  }

  async refineView(parent: string, atoms: Condition["atoms"]): Promise<ViewInfoResponse> {
    return this.request("POST", "/views", this.withSession({ refine: parent, atoms }));
  }

  async relaxView(parent: string, atoms: Condition["atoms"]): Promise<ViewInfoResponse> {
    return this.request("POST", "/views", this.withSession({ relax: parent, atoms }));
  }

  async viewRows(viewId: string, offset: number, limit: number): Promise<RowsPage> {
    const params = new URLSearchParams({ offset: String(offset), limit: String(limit) });
    if (this.sessionId) {
      params.set("session", this.sessionId);
    }
    return this.request<RowsPage>("GET", `/views/${encodeURIComponent(viewId)}/rows?${params.toString()}`);
  }

  async viewLineage(viewId: string): Promise<LineageResponse> {
    return this.request<LineageResponse>(
      "GET",
      `/views/${encodeURIComponent(viewId)}/lineage${this.sessionQuery()}`,
    );
  }

  async markCells(cells: CellAddress[], label?: string, origin = "manual"): Promise<MarkSetInfo> {
    return this.request("POST", "/marks", this.withSession({ cells, label: label ?? null, origin }));
  }

  async unmarkCells(markSetId: string, cells: CellAddress[]): Promise<{ mark_set: MarkSetInfo | null; deleted: boolean }> {
    return this.request("DELETE", `/marks/${encodeURIComponent(markSetId)}/cells`, this.withSession({ cells }));
  }

  async suggestViews(markSetId: string): Promise<SuggestionsResponse> {
    return this.request("POST", "/suggest/views", this.withSession({ marks: markSetId }));
  }

  async previewBatchCorrection(
    viewId: string,
    attribute: string,
    oldValue: string | null,
    newValue: string | null,
  ): Promise<PreviewResponse> {
    return this.request(
      "POST",
      "/corrections?preview=true",
      this.withSession({ view: viewId, attribute, old: oldValue, new: newValue }),
    );
  }

  async batchCorrect(
    viewId: string,
    attribute: string,
    oldValue: string | null,
    newValue: string | null,
    actor: string,
  ): Promise<AuditEntryInfo> {
    return this.request(
      "POST",
      "/corrections",
      this.withSession({ view: viewId, attribute, old: oldValue, new: newValue, actor }),
    );
  }

  async correctCell(
    viewId: string,
    cell: CellAddress,
    newValue: string | null,
    actor: string,
  ): Promise<AuditEntryInfo> {
    return this.request(
      "POST",
      "/corrections",
      this.withSession({ view: viewId, cell, new: newValue, actor }),
    );
  }

  async undoEntry(entryId: number, actor = "ui"): Promise<AuditEntryInfo> {
    return this.request(
      "POST",
      `/corrections/${entryId}/undo`,
      this.withSession({ actor }),
    );
  }

  async history(): Promise<HistoryResponse> {
    return this.request<HistoryResponse>("GET", `/history${this.sessionQuery()}`);
  }

  async detectVariants(table: string, attribute: string): Promise<VariantsResponse> {
    return this.request("POST", "/detect/variants", this.withSession({ table, attribute }));
  }
}

// POST /views responses are the view wire shape plus evaluation metadata.
export interface ViewInfoResponse {
  id: string;
  table: string;
  condition: Condition;
  parent: string | null;
  derivation: "root" | "refine" | "relax" | "from_marks";
  rows: number;
  empty: boolean;
}
