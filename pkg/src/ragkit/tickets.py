"""Feedback tickets: users report incorrect answers, the data expert
answers and routes each case, either updating the dataset or forwarding
to developers, then closes it.

The store is an append-only JSONL event log (one full ticket snapshot per
line); the latest snapshot per ticket_id wins on load.  Every write is
flushed before the call returns, so a returned ticket is durable.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import IllegalTransition, StorageError, UnknownTicket


class TicketStatus(str, Enum):
    OPEN = "open"
    EXPERT_ANSWERED = "expert_answered"
    DATASET_UPDATED = "dataset_updated"
    FORWARDED_TO_DEV = "forwarded_to_dev"
    CLOSED = "closed"


LEGAL_TRANSITIONS: dict[TicketStatus, frozenset[TicketStatus]] = {
    TicketStatus.OPEN: frozenset({TicketStatus.EXPERT_ANSWERED}),
    TicketStatus.EXPERT_ANSWERED: frozenset(
        {TicketStatus.DATASET_UPDATED, TicketStatus.FORWARDED_TO_DEV}
    ),
    TicketStatus.DATASET_UPDATED: frozenset({TicketStatus.CLOSED}),
    TicketStatus.FORWARDED_TO_DEV: frozenset({TicketStatus.CLOSED}),
    TicketStatus.CLOSED: frozenset(),
}


@dataclass
class TicketNote:
    at: float
    author: str
    text: str


@dataclass
class FeedbackTicket:
    ticket_id: str
    question: str
    answer_given: str
    reporter: str
    created_at: float
    status: TicketStatus
    notes: list[TicketNote] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "question": self.question,
            "answer_given": self.answer_given,
            "reporter": self.reporter,
            "created_at": self.created_at,
            "status": self.status.value,
            "notes": [{"at": n.at, "author": n.author, "text": n.text} for n in self.notes],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "FeedbackTicket":
        return cls(
            ticket_id=raw["ticket_id"],
            question=raw["question"],
            answer_given=raw["answer_given"],
            reporter=raw["reporter"],
            created_at=raw["created_at"],
            status=TicketStatus(raw["status"]),
            notes=[TicketNote(n["at"], n["author"], n["text"]) for n in raw.get("notes", [])],
        )


def allowed_transitions(status: TicketStatus) -> list[TicketStatus]:
    """Next statuses legal from the given one, in workflow order."""
    order = list(TicketStatus)
    return sorted(LEGAL_TRANSITIONS[TicketStatus(status)], key=order.index)


class TicketStore:
    """Disk-backed ticket registry with serialized writes."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._tickets: dict[str, FeedbackTicket] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    ticket = FeedbackTicket.from_dict(json.loads(line))
                    self._tickets[ticket.ticket_id] = ticket

    def file_ticket(self, question: str, answer_given: str, reporter: str) -> FeedbackTicket:
        """Open a new ticket; it is persisted before this returns."""
        ticket = FeedbackTicket(
            ticket_id=f"tk-{uuid.uuid4().hex[:10]}",
            question=question,
            answer_given=answer_given,
            reporter=reporter,
            created_at=time.time(),
            status=TicketStatus.OPEN,
        )
        with self._lock:
            self._append(ticket)
            self._tickets[ticket.ticket_id] = ticket
        return ticket

    def transition(
        self, ticket_id: str, to: TicketStatus | str, note: str = "", author: str = ""
    ) -> FeedbackTicket:
        """Advance a ticket along the workflow; illegal moves are rejected."""
        to = TicketStatus(to)
        with self._lock:
            ticket = self._tickets.get(ticket_id)
            if ticket is None:
                raise UnknownTicket(ticket_id)
            if to not in LEGAL_TRANSITIONS[ticket.status]:
                raise IllegalTransition(f"{ticket_id}: {ticket.status.value} -> {to.value}")
            last_at = ticket.notes[-1].at if ticket.notes else ticket.created_at
            stamped = max(time.time(), last_at)
            updated = FeedbackTicket(
                ticket_id=ticket.ticket_id,
                question=ticket.question,
                answer_given=ticket.answer_given,
                reporter=ticket.reporter,
                created_at=ticket.created_at,
                status=to,
                notes=ticket.notes + [TicketNote(at=stamped, author=author, text=note)],
            )
            self._append(updated)
            self._tickets[ticket_id] = updated
        return updated

    def get(self, ticket_id: str) -> FeedbackTicket:
        ticket = self._tickets.get(ticket_id)
        if ticket is None:
            raise UnknownTicket(ticket_id)
        return ticket

    def list(self, status: TicketStatus | str | None = None) -> list[FeedbackTicket]:
        tickets = sorted(self._tickets.values(), key=lambda t: (t.created_at, t.ticket_id))
        if status is None:
            return tickets
        status = TicketStatus(status)
        return [t for t in tickets if t.status == status]

    def _append(self, ticket: FeedbackTicket) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(ticket.to_dict()) + "\n")
                fh.flush()
        except OSError as exc:
            raise StorageError(f"cannot persist ticket {ticket.ticket_id}: {exc}") from exc
