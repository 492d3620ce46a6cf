/** Typed client for the ragkit HTTP API.
 *
 * fetch is injectable so tests (and non-browser hosts) can script the
 * backend.  Server errors arrive as {error: {code, message}} and are
 * rethrown as ApiError.
 */

import type { QueryResponse, Ticket, TicketStatus } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly token: string | null = null,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async query(question: string): Promise<QueryResponse> {
    return this.post<QueryResponse>("/api/query", { question });
  }

  async fileFeedback(
    question: string,
    answerGiven: string,
    reporter: string,
  ): Promise<{ ticket_id: string }> {
    return this.post<{ ticket_id: string }>("/api/feedback", {
      question,
      answer_given: answerGiven,
      reporter,
    });
  }

  async listTickets(status?: TicketStatus): Promise<Ticket[]> {
    const suffix = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.request<Ticket[]>("GET", `/api/feedback${suffix}`);
  }

  async transitionTicket(
    ticketId: string,
    to: TicketStatus,
    note = "",
    author = "",
  ): Promise<Ticket> {
    return this.post<Ticket>(
      `/api/feedback/${encodeURIComponent(ticketId)}/transition`,
      { to, note, author },
    );
  }

  async health(): Promise<{ status: string; config_version: string; chunk_count: number }> {
    return this.request("GET", "/api/health");
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>("POST", path, body);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError("network", err instanceof Error ? err.message : String(err), 0);
    }
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status} ${response.statusText}`;
      try {
        const parsed = (await response.json()) as { error?: { code: string; message: string } };
        if (parsed.error) {
          code = parsed.error.code;
          message = parsed.error.message;
        }
      } catch {
        // non-JSON body: keep the status-line message
      }
      throw new ApiError(code, message, response.status);
    }
    return (await response.json()) as T;
  }
}
