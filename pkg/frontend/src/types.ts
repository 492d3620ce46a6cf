/** Mirrors of the ragkit HTTP API payloads. */

export interface Source {
  doc_id: string;
  doc_title: string;
  chunk_id: string;
  excerpt: string;
  score: number;
  section_path: string[];
}

export interface QueryResponse {
  answer: string;
  sources: Source[];
  latency: number;
  cost: number;
  config_version: string;
}

export type TicketStatus =
  | "open"
  | "expert_answered"
  | "dataset_updated"
  | "forwarded_to_dev"
  | "closed";

export interface TicketNote {
  at: number;
  author: string;
  text: string;
}

export interface Ticket {
  ticket_id: string;
  question: string;
  answer_given: string;
  reporter: string;
  created_at: number;
  status: TicketStatus;
  notes: TicketNote[];
  allowed_transitions: TicketStatus[];
}

/** One question/answer exchange in the chat log. */
export interface ChatEntry {
  question: string;
  response: QueryResponse | null;
  error: string | null;
  reported: boolean;
}
