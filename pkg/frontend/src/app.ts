/** Wires the chat pane and the triage queue to the API client.
 *
 * One query in flight at a time; feedback posts are independent.  The
 * triage pane refreshes after every change it causes.
 */

import { ApiClient } from "./api.js";
import { renderChatEntry, renderEmptyQueue, renderTicketRow } from "./render.js";
import type { ChatEntry, Ticket, TicketStatus } from "./types.js";

export interface AppElements {
  form: HTMLFormElement;
  input: HTMLInputElement;
  submit: HTMLButtonElement;
  log: HTMLElement;
  queue: HTMLElement;
  queueFilter: HTMLSelectElement;
  queueRefresh: HTMLButtonElement;
}

export class App {
  private entries: ChatEntry[] = [];
  private busy = false;
  readonly reporter: string;

  constructor(
    private readonly client: ApiClient,
    private readonly elements: AppElements,
    reporter = "operator",
  ) {
    this.reporter = reporter;
    elements.input.addEventListener("input", () => this.syncSubmitState());
    elements.form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitQuestion();
    });
    elements.queueRefresh.addEventListener("click", () => void this.refreshQueue());
    elements.queueFilter.addEventListener("change", () => void this.refreshQueue());
    this.syncSubmitState();
  }

  syncSubmitState(): void {
    this.elements.submit.disabled = this.busy || !this.elements.input.value.trim();
  }

  async submitQuestion(): Promise<void> {
    const question = this.elements.input.value.trim();
    if (!question || this.busy) return;
    this.busy = true;
    this.syncSubmitState();

    const entry: ChatEntry = { question, response: null, error: null, reported: false };
    this.entries.push(entry);
    this.renderLog();
    try {
      entry.response = await this.client.query(question);
      this.elements.input.value = "";
    } catch (err) {
      // keep the input so the user can retry the same question
      entry.error = err instanceof Error ? err.message : String(err);
    } finally {
      this.busy = false;
      this.syncSubmitState();
      this.renderLog();
    }
  }

  async reportEntry(entry: ChatEntry): Promise<void> {
    if (entry.reported || !entry.response) return;
    try {
      await this.client.fileFeedback(entry.question, entry.response.answer, this.reporter);
      entry.reported = true;
    } catch {
      // leave the button active; the user can retry
    }
    this.renderLog();
    await this.refreshQueue();
  }

  async transitionTicket(ticket: Ticket, to: TicketStatus): Promise<void> {
    try {
      await this.client.transitionTicket(ticket.ticket_id, to, "", this.reporter);
    } finally {
      await this.refreshQueue();
    }
  }

  async refreshQueue(): Promise<void> {
    const filter = this.elements.queueFilter.value as TicketStatus | "";
    let tickets: Ticket[];
    try {
      tickets = await this.client.listTickets(filter || undefined);
    } catch {
      tickets = [];
    }
    this.elements.queue.replaceChildren();
    if (!tickets.length) {
      this.elements.queue.append(renderEmptyQueue());
      return;
    }
    for (const ticket of tickets) {
      this.elements.queue.append(
        renderTicketRow(ticket, { onTransition: (t, status) => void this.transitionTicket(t, status) }),
      );
    }
  }

  private renderLog(): void {
    this.elements.log.replaceChildren();
    for (const entry of this.entries) {
      this.elements.log.append(
        renderChatEntry(entry, { onReport: (e) => void this.reportEntry(e) }),
      );
    }
  }
}

/** Mount the app onto the ids used by index.html. */
export function mount(client?: ApiClient): App {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  };
  const params = new URLSearchParams(window.location.search);
  const resolved =
    client ??
    new ApiClient(params.get("api") ?? "", params.get("token"));
  const app = new App(resolved, {
    form: byId<HTMLFormElement>("ask-form"),
    input: byId<HTMLInputElement>("ask-input"),
    submit: byId<HTMLButtonElement>("ask-submit"),
    log: byId<HTMLElement>("chat-log"),
    queue: byId<HTMLElement>("ticket-queue"),
    queueFilter: byId<HTMLSelectElement>("queue-filter"),
    queueRefresh: byId<HTMLButtonElement>("queue-refresh"),
  });
  void app.refreshQueue();
  return app;
}
