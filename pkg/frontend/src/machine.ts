/** Client-side mirror of the server's ticket workflow.
 *
 * The UI only offers moves this map allows, so a well-behaved client can
 * never trigger an illegal-transition error.  Keep in lockstep with the
 * service: open -> expert_answered -> dataset_updated | forwarded_to_dev
 * -> closed.
 */

import type { TicketStatus } from "./types.js";

export const LEGAL_TRANSITIONS: Record<TicketStatus, TicketStatus[]> = {
  open: ["expert_answered"],
  expert_answered: ["dataset_updated", "forwarded_to_dev"],
  dataset_updated: ["closed"],
  forwarded_to_dev: ["closed"],
  closed: [],
};

export function allowedTransitions(status: TicketStatus): TicketStatus[] {
  return [...LEGAL_TRANSITIONS[status]];
}

export const STATUS_LABELS: Record<TicketStatus, string> = {
  open: "Open",
  expert_answered: "Expert answered",
  dataset_updated: "Dataset updated",
  forwarded_to_dev: "Forwarded to developers",
  closed: "Closed",
};
