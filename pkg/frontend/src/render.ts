/** DOM builders for the chat log and the triage queue.
 *
 * Pure functions from state to elements; the app swaps whole entries on
 * change rather than patching, which is plenty at this scale.
 */

import { allowedTransitions, STATUS_LABELS } from "./machine.js";
import type { ChatEntry, Source, Ticket, TicketStatus } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderSourceCard(source: Source): HTMLElement {
  const card = el("div", "source-card");
  const title = el("div", "source-title", source.doc_title);
  const path = source.section_path.length
    ? el("div", "source-path", source.section_path.join(" › "))
    : null;
  const excerpt = el("blockquote", "source-excerpt", source.excerpt);
  const meta = el(
    "div",
    "source-meta",
    `${source.chunk_id} · score ${source.score.toFixed(3)}`,
  );
  card.append(title);
  if (path) card.append(path);
  card.append(excerpt, meta);
  return card;
}

export interface ChatEntryHandlers {
  onReport: (entry: ChatEntry) => void;
}

export function renderChatEntry(entry: ChatEntry, handlers: ChatEntryHandlers): HTMLElement {
  const container = el("article", "chat-entry");
  container.append(el("div", "chat-question", entry.question));

  if (entry.error !== null) {
    container.append(el("div", "chat-error", `The assistant is unavailable: ${entry.error}`));
    return container;
  }
  const response = entry.response;
  if (!response) {
    container.append(el("div", "chat-pending", "Thinking…"));
    return container;
  }

  container.append(el("div", "chat-answer", response.answer));

  const stats = el(
    "div",
    "chat-stats",
    `${(response.latency * 1000).toFixed(0)} ms · $${response.cost.toFixed(6)} · ${response.config_version}`,
  );
  container.append(stats);

  if (response.sources.length) {
    const panel = el("section", "sources-panel");
    panel.append(el("h3", "sources-heading", "Sources"));
    for (const source of response.sources) {
      panel.append(renderSourceCard(source));
    }
    container.append(panel);
  }

  if (entry.reported) {
    container.append(el("span", "reported-badge", "Reported ✓"));
  } else {
    const button = el("button", "report-button", "Report incorrect answer");
    button.type = "button";
    button.addEventListener("click", () => handlers.onReport(entry));
    container.append(button);
  }
  return container;
}

export interface TicketRowHandlers {
  onTransition: (ticket: Ticket, to: TicketStatus) => void;
}

export function renderTicketRow(ticket: Ticket, handlers: TicketRowHandlers): HTMLElement {
  const row = el("div", "ticket-row");
  row.dataset["ticketId"] = ticket.ticket_id;
  const head = el("div", "ticket-head");
  head.append(
    el("span", "ticket-id", ticket.ticket_id),
    el("span", `ticket-status status-${ticket.status}`, STATUS_LABELS[ticket.status]),
  );
  row.append(head);
  row.append(el("div", "ticket-question", ticket.question));
  row.append(el("div", "ticket-answer", ticket.answer_given));
  if (ticket.reporter) {
    row.append(el("div", "ticket-reporter", `reported by ${ticket.reporter}`));
  }

  // offer exactly the moves the server allows; prefer its list, fall back
  // to the local mirror (identical by contract)
  const nextStatuses = ticket.allowed_transitions ?? allowedTransitions(ticket.status);
  const actions = el("div", "ticket-actions");
  for (const status of nextStatuses) {
    const button = el("button", "transition-button", STATUS_LABELS[status]);
    button.type = "button";
    button.dataset["to"] = status;
    button.addEventListener("click", () => handlers.onTransition(ticket, status));
    actions.append(button);
  }
  row.append(actions);
  return row;
}

export function renderEmptyQueue(): HTMLElement {
  return el("div", "queue-empty", "No tickets in this view.");
}
