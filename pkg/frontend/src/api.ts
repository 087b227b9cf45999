/** Typed client over the review API; the only way the UI touches the server. */

import type {
  AuditArtifact,
  CodeSet,
  DocumentFull,
  Hierarchy,
  MergeDecision,
  ProjectState,
  ReviewResult,
  SaturationReport,
  ThemeSet,
  UniqueCode,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  state(): Promise<ProjectState> {
    return this.request("/api/state");
  }

  document(id: string): Promise<DocumentFull> {
    return this.request(`/api/documents/${encodeURIComponent(id)}`);
  }

  codes(): Promise<{ codesets: CodeSet[] }> {
    return this.request("/api/codes");
  }

  uniqueCodes(): Promise<{ codes: UniqueCode[] }> {
    return this.request("/api/unique-codes");
  }

  mergeDecisions(): Promise<{ decisions: MergeDecision[] }> {
    return this.request("/api/merge-decisions");
  }

  saturation(): Promise<SaturationReport> {
    return this.request("/api/saturation");
  }

  themes(): Promise<ThemeSet> {
    return this.request("/api/themes");
  }

  hierarchy(): Promise<Hierarchy> {
    return this.request("/api/hierarchy");
  }

  audit(): Promise<AuditArtifact> {
    return this.request("/api/audit");
  }

  rejectMerge(decisionId: number): Promise<ReviewResult & { unique_codes: number }> {
    return this.post(`/api/review/merges/${decisionId}/reject`);
  }

  acceptMerge(decisionId: number): Promise<{ decision_id: number }> {
    return this.post(`/api/review/merges/${decisionId}/accept`);
  }

  editTheme(themeId: string, edit: { name?: string; description?: string }): Promise<ReviewResult> {
    return this.post(`/api/review/themes/${encodeURIComponent(themeId)}`, edit);
  }

  moveCodes(themeId: string, move: { add?: number[]; remove?: number[] }): Promise<ReviewResult> {
    return this.post(`/api/review/themes/${encodeURIComponent(themeId)}/codes`, {
      add: move.add ?? [],
      remove: move.remove ?? [],
    });
  }

  promoteSubtheme(subthemeIndex: number): Promise<ReviewResult> {
    return this.post("/api/review/hierarchy/promote", { subtheme_index: subthemeIndex });
  }

  assignSubtheme(subthemeIndex: number, parentIndex: number): Promise<ReviewResult> {
    return this.post("/api/review/hierarchy/assign", {
      subtheme_index: subthemeIndex,
      parent_index: parentIndex,
    });
  }

  rerunStage(stage: string): Promise<{ stage: string; status: string }> {
    return this.post("/api/review/rerun", { stage });
  }
}
