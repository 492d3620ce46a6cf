from __future__ import annotations

import itertools

import pytest

from ragkit.errors import IllegalTransition, StorageError, UnknownTicket
from ragkit.tickets import (
    LEGAL_TRANSITIONS,
    TicketStatus,
    TicketStore,
    allowed_transitions,
)


@pytest.fixture
def store(tmp_path):
    return TicketStore(tmp_path / "tickets.jsonl")


def test_file_ticket_opens_and_persists(store, tmp_path):
    ticket = store.file_ticket("q?", "wrong answer", "operator-1")
    assert ticket.status == TicketStatus.OPEN
    reloaded = TicketStore(tmp_path / "tickets.jsonl")
    assert reloaded.get(ticket.ticket_id).question == "q?"


def test_ticket_ids_unique(store):
    a = store.file_ticket("q1", "a1", "r")
    b = store.file_ticket("q2", "a2", "r")
    assert a.ticket_id != b.ticket_id


def test_storage_error_no_partial_ticket(tmp_path):
    store = TicketStore(tmp_path / "tickets.jsonl")
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    store.path = blocker / "tickets.jsonl"  # parent is a file: append must fail
    with pytest.raises(StorageError):
        store.file_ticket("q", "a", "r")
    assert store.list() == []


def test_happy_path_dataset_updated(store):
    t = store.file_ticket("q", "a", "r")
    for status in ("expert_answered", "dataset_updated", "closed"):
        t = store.transition(t.ticket_id, status, note=f"-> {status}")
    assert t.status == TicketStatus.CLOSED
    assert [n.text for n in t.notes] == ["-> expert_answered", "-> dataset_updated", "-> closed"]


def test_happy_path_forwarded_to_dev(store):
    t = store.file_ticket("q", "a", "r")
    store.transition(t.ticket_id, "expert_answered")
    store.transition(t.ticket_id, "forwarded_to_dev")
    final = store.transition(t.ticket_id, "closed")
    assert final.status == TicketStatus.CLOSED


def test_open_to_closed_is_illegal(store):
    t = store.file_ticket("q", "a", "r")
    with pytest.raises(IllegalTransition):
        store.transition(t.ticket_id, "closed")


def test_exhaustive_transition_matrix(store):
    """Every (from, to) status pair behaves exactly per the state machine."""
    for source, target in itertools.product(TicketStatus, TicketStatus):
        ticket = store.file_ticket("q", "a", "r")
        _drive_to(store, ticket.ticket_id, source)
        if target in LEGAL_TRANSITIONS[source]:
            updated = store.transition(ticket.ticket_id, target)
            assert updated.status == target
        else:
            with pytest.raises(IllegalTransition):
                store.transition(ticket.ticket_id, target)
            assert store.get(ticket.ticket_id).status == source


def _drive_to(store: TicketStore, ticket_id: str, target: TicketStatus) -> None:
    paths = {
        TicketStatus.OPEN: (),
        TicketStatus.EXPERT_ANSWERED: ("expert_answered",),
        TicketStatus.DATASET_UPDATED: ("expert_answered", "dataset_updated"),
        TicketStatus.FORWARDED_TO_DEV: ("expert_answered", "forwarded_to_dev"),
        TicketStatus.CLOSED: ("expert_answered", "dataset_updated", "closed"),
    }
    for step in paths[target]:
        store.transition(ticket_id, step)


def test_unknown_ticket(store):
    with pytest.raises(UnknownTicket):
        store.transition("tk-none", "expert_answered")
    with pytest.raises(UnknownTicket):
        store.get("tk-none")


def test_timestamps_monotone(store):
    t = store.file_ticket("q", "a", "r")
    t = store.transition(t.ticket_id, "expert_answered")
    t = store.transition(t.ticket_id, "dataset_updated")
    t = store.transition(t.ticket_id, "closed")
    stamps = [t.created_at] + [n.at for n in t.notes]
    assert stamps == sorted(stamps)


def test_list_filter_by_status(store):
    a = store.file_ticket("q1", "a", "r")
    store.file_ticket("q2", "a", "r")
    store.transition(a.ticket_id, "expert_answered")
    assert [t.ticket_id for t in store.list("open")] != []
    assert all(t.status == TicketStatus.OPEN for t in store.list("open"))
    assert len(store.list()) == 2


def test_allowed_transitions_view():
    assert allowed_transitions(TicketStatus.OPEN) == [TicketStatus.EXPERT_ANSWERED]
    assert allowed_transitions(TicketStatus.EXPERT_ANSWERED) == [
        TicketStatus.DATASET_UPDATED,
        TicketStatus.FORWARDED_TO_DEV,
    ]
    assert allowed_transitions(TicketStatus.CLOSED) == []
