/**
 * Thin JSON client for the engine's HTTP API. The base URL is configurable;
 * a fetch implementation can be injected for tests.
 */

import type {
  DocumentResponse,
  ExtractRequest,
  ExtractResponse,
  HealthResponse,
  SearchRequest,
  SearchResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

interface FieldIssue {
  field: string;
  message: string;
}

function detailToMessage(detail: unknown): string {
  if (typeof detail === "string") return detail;
  if (Array.isArray(detail)) {
    return (detail as FieldIssue[])
      .map((issue) => `${issue.field}: ${issue.message}`)
      .join("; ");
  }
  return "request failed";
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  setBaseUrl(url: string): void {
    this.baseUrl = url.replace(/\/+$/, "");
  }

  getBaseUrl(): string {
    return this.baseUrl;
  }

  async search(request: SearchRequest, signal?: AbortSignal): Promise<SearchResponse> {
    return this.post<SearchResponse>("/search", request, signal);
  }

  async extract(request: ExtractRequest, signal?: AbortSignal): Promise<ExtractResponse> {
    return this.post<ExtractResponse>("/extract", request, signal);
  }

  async getDocument(docId: string): Promise<DocumentResponse> {
    return this.get<DocumentResponse>(`/documents/${encodeURIComponent(docId)}`);
  }

  async health(): Promise<HealthResponse> {
    return this.get<HealthResponse>("/health");
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, { method: "GET" });
    return this.decode<T>(response);
  }

  private async post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    return this.decode<T>(response);
  }

  private async decode<T>(response: Response): Promise<T> {
    if (!response.ok) {
      let message = `HTTP ${response.status}`;
      try {
        const payload = (await response.json()) as { detail?: unknown };
        message = detailToMessage(payload.detail);
      } catch {
        // non-JSON error body; keep the status message
      }
      throw new ApiError(message, response.status);
    }
    return (await response.json()) as T;
  }
}
