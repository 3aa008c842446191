/**
 * Typed client for the annotation service. Every call carries the bearer
 * token; errors are normalized to ApiError so callers can branch on status
 * (401 -> re-auth, 0 -> network/retry) and show the server's detail verbatim.
 */

import type {
  CandidateView,
  ExportView,
  RatingInput,
  SessionView,
  TurnView,
} from "./types.js";

export interface ApiConfig {
  /** Service origin, e.g. "http://127.0.0.1:8100". Trailing slash ok. */
  baseUrl: string;
  token: string;
  /** Injectable for tests; defaults to the global fetch. */
  fetchFn?: typeof fetch;
}

export class ApiError extends Error {
  /** HTTP status; 0 when the request never reached the service. */
  readonly status: number;
  /** The server's "detail" string, verbatim, when it sent one. */
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(status === 0 ? `network error: ${detail}` : `HTTP ${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }

  get isAuthFailure(): boolean {
    return this.status === 401;
  }

  get isNetworkFailure(): boolean {
    return this.status === 0;
  }
}

export class AnnotationApi {
  private readonly baseUrl: string;
  private readonly token: string;
  private readonly fetchFn: typeof fetch;

  constructor(config: ApiConfig) {
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.token = config.token;
    this.fetchFn = config.fetchFn ?? fetch;
  }

  listCandidates(): Promise<CandidateView[]> {
    return this.request("GET", "/candidates");
  }

  createSession(agentId: string, annotator: string): Promise<SessionView> {
    return this.request("POST", "/sessions", { agent_id: agentId, annotator });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  postTurn(sessionId: string, text: string): Promise<TurnView> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/turns`, { text });
  }

  submitRating(sessionId: string, rating: RatingInput): Promise<SessionView> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/rating`, {
      conformity: rating.conformity,
      justification: rating.justification,
      item_agreement: rating.item_agreement,
    });
  }

  closeSession(sessionId: string): Promise<SessionView> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/close`);
  }

  exportRatings(): Promise<ExportView> {
    return this.request("GET", "/export");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: {
          Authorization: `Bearer ${this.token}`,
          ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
        },
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : String(err));
    }
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as T;
  }
}

/** Pull FastAPI's {"detail": ...} out of an error body, else the raw text. */
async function detailOf(response: Response): Promise<string> {
  const raw = await response.text().catch(() => "");
  try {
    const parsed = JSON.parse(raw);
    if (parsed && typeof parsed.detail === "string") return parsed.detail;
    if (parsed && parsed.detail !== undefined) return JSON.stringify(parsed.detail);
  } catch {
    /* not JSON */
  }
  return raw || response.statusText || "request failed";
}
