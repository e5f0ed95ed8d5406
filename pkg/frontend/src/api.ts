// Thin typed client over the service REST API. All state mutations go
// through these calls; the store never invents data locally.

import type {
  ApiSchema,
  ConfigOverrides,
  CorpusSummary,
  ExportRow,
  GenerateResponse,
  ReviewEntry,
  ReviewState,
  SessionSummary,
  SessionView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
  }

  /** Pipeline error code for 502 responses, when the service provided one. */
  get pipelineError(): string | null {
    if (this.detail && typeof this.detail === "object" && "error" in this.detail) {
      return String((this.detail as { error: unknown }).error);
    }
    return null;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const text = await response.text();
    let body: unknown = text;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      // non-JSON body (CSV export); handled by caller via requestText
    }
    if (!response.ok) {
      const detail =
        body && typeof body === "object" && "detail" in body
          ? (body as { detail: unknown }).detail
          : body;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  private async requestText(path: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    const text = await response.text();
    if (!response.ok) {
      throw new ApiError(response.status, text);
    }
    return text;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getSchema(): Promise<ApiSchema> {
    return this.request<ApiSchema>("/api/schema");
  }

  listCorpora(): Promise<CorpusSummary[]> {
    return this.request<CorpusSummary[]>("/api/corpora");
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.request<SessionSummary[]>("/api/sessions");
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>(`/api/sessions/${sessionId}`);
  }

  createSession(
    corpusId: string,
    configCode: string,
    questionnaireCsv: string,
  ): Promise<SessionView> {
    return this.post<SessionView>("/api/sessions", {
      corpus_id: corpusId,
      config_code: configCode,
      questionnaire_csv: questionnaireCsv,
    });
  }

  generate(
    sessionId: string,
    questionId: string,
    overrides?: ConfigOverrides,
  ): Promise<GenerateResponse> {
    const payload = overrides && Object.keys(overrides).length > 0
      ? { config_overrides: overrides }
      : {};
    return this.post<GenerateResponse>(
      `/api/sessions/${sessionId}/questions/${questionId}/generate`,
      payload,
    );
  }

  review(
    sessionId: string,
    questionId: string,
    state: ReviewState,
    editedText?: string,
  ): Promise<ReviewEntry> {
    return this.post<ReviewEntry>(
      `/api/sessions/${sessionId}/questions/${questionId}/review`,
      editedText === undefined ? { state } : { state, edited_text: editedText },
    );
  }

  exportJson(sessionId: string): Promise<ExportRow[]> {
    return this.request<ExportRow[]>(`/api/sessions/${sessionId}/export?format=json`);
  }

  exportCsv(sessionId: string): Promise<string> {
    return this.requestText(`/api/sessions/${sessionId}/export?format=csv`);
  }

  exportCsvUrl(sessionId: string): string {
    return `${this.baseUrl}/api/sessions/${sessionId}/export?format=csv`;
  }
}
