/** Typed client for the session REST API.
 *
 * Mutations targeting one session are chained client-side so a rapid
 * double-submit can never interleave; the server additionally
 * serializes per session.
 */

import type {
  HistoryPayload,
  ProfilePayload,
  SessionPayload,
  StartRequest,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly violations: string[] = [],
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ConnectionError extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
    this.name = "ConnectionError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private queues = new Map<string, Promise<unknown>>();

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (cause) {
      throw new ConnectionError(cause);
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const violations = Array.isArray((body as { violations?: string[] }).violations)
        ? (body as { violations: string[] }).violations
        : [];
      const detail =
        (body as { detail?: string }).detail ??
        (violations.length ? violations.join("; ") : `HTTP ${response.status}`);
      throw new ApiError(response.status, detail, violations);
    }
    return body as T;
  }

  private enqueue<T>(sessionId: string, task: () => Promise<T>): Promise<T> {
    const previous = this.queues.get(sessionId) ?? Promise.resolve();
    const next = previous.then(task, task);
    this.queues.set(
      sessionId,
      next.catch(() => undefined),
    );
    return next;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  startSession(body: StartRequest): Promise<SessionPayload> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getSession(sessionId: string): Promise<SessionPayload> {
    return this.request(`/sessions/${sessionId}`);
  }

  sendFeedback(sessionId: string, text: string): Promise<SessionPayload> {
    return this.enqueue(sessionId, () =>
      this.request(`/sessions/${sessionId}/feedback`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text }),
      }),
    );
  }

  confirm(sessionId: string): Promise<ProfilePayload> {
    return this.enqueue(sessionId, () =>
      this.request(`/sessions/${sessionId}/confirm`, { method: "POST" }),
    );
  }

  history(sessionId: string): Promise<HistoryPayload> {
    return this.request(`/sessions/${sessionId}/history`);
  }
}
