import type { JudgmentPayload, NextResponse, SubmitResponse } from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** Thin typed client for the human-evaluation HTTP API. */
export class AnnotationClient {
  constructor(
    private readonly sessionId: string,
    private readonly annotatorToken: string,
    private readonly fetchImpl: FetchLike = fetch,
    private readonly baseUrl: string = "",
  ) {}

  private async request<T>(
    path: string,
    init?: { method?: string; body?: string },
  ): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: init?.method ?? "GET",
      headers: { "content-type": "application/json" },
      body: init?.body,
    });
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      const detail =
        typeof payload.detail === "string" ? payload.detail : "request failed";
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  nextItem(): Promise<NextResponse> {
    const token = encodeURIComponent(this.annotatorToken);
    return this.request<NextResponse>(
      `/sessions/${this.sessionId}/next?annotator=${token}`,
    );
  }

  submit(judgment: JudgmentPayload): Promise<SubmitResponse> {
    const token = encodeURIComponent(this.annotatorToken);
    return this.request<SubmitResponse>(
      `/sessions/${this.sessionId}/judgments?annotator=${token}`,
      { method: "POST", body: JSON.stringify(judgment) },
    );
  }
}
