"""HTTP API over a built pipeline: querying, feedback tickets, reindexing,
config inspection, and health.

All errors are reported as {"error": {"code", "message"}} with an
appropriate status code.  An optional static bearer token protects every
endpoint except /api/health.
"""

from __future__ import annotations

import logging
import re

from fastapi import Depends, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import (
    EmptyQuery,
    IllegalTransition,
    IndexNotReady,
    IngestError,
    MissingEmbedder,
    ProviderError,
    ProviderTimeout,
    RagError,
    StorageError,
    UnknownQuery,
    UnknownTicket,
)
from .pipeline import Pipeline, config_to_dict
from .tickets import TicketStore, allowed_transitions

logger = logging.getLogger(__name__)

_STATUS_BY_ERROR = {
    EmptyQuery: 400,
    MissingEmbedder: 400,
    UnknownTicket: 404,
    UnknownQuery: 404,
    IllegalTransition: 409,
    IndexNotReady: 503,
    StorageError: 500,
    IngestError: 500,
    ProviderTimeout: 502,
    ProviderError: 502,
}

_REDACTED_CONFIG_KEYS = {"corpus_manifest", "mock_script", "endpoint"}


def _error_code(exc: Exception) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", type(exc).__name__).lower()


def _error_response(exc: Exception, status: int) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": _error_code(exc), "message": str(exc)}},
    )


class QueryBody(BaseModel):
    question: str


class FeedbackBody(BaseModel):
    question: str
    answer_given: str
    reporter: str = ""


class TransitionBody(BaseModel):
    to: str
    note: str = ""
    author: str = ""


def _redact(value):
    if isinstance(value, dict):
        return {k: ("<redacted>" if k in _REDACTED_CONFIG_KEYS and value[k] else _redact(v))
                for k, v in value.items()}
    return value


def create_app(pipeline: Pipeline, ticket_store: TicketStore, token: str | None = None) -> FastAPI:
    app = FastAPI(title="ragkit", docs_url=None, redoc_url=None)
    # the browser client is served separately; the bearer token is the gate
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    async def require_token(request: Request):
        if token is None or request.url.path == "/api/health":
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise PermissionError("missing or invalid bearer token")

    @app.exception_handler(RagError)
    async def handle_rag_error(request: Request, exc: RagError):
        status = 500
        for klass, code in _STATUS_BY_ERROR.items():
            if isinstance(exc, klass):
                status = code
                break
        return _error_response(exc, status)

    @app.exception_handler(ValueError)
    async def handle_value_error(request: Request, exc: ValueError):
        return _error_response(exc, 400)

    @app.exception_handler(PermissionError)
    async def handle_permission_error(request: Request, exc: PermissionError):
        return JSONResponse(
            status_code=401,
            content={"error": {"code": "unauthorized", "message": str(exc)}},
        )

    @app.post("/api/query", dependencies=[Depends(require_token)])
    def api_query(body: QueryBody):
        return pipeline.answer_query(body.question).to_dict()

    @app.post("/api/feedback", dependencies=[Depends(require_token)])
    def api_feedback(body: FeedbackBody):
        ticket = ticket_store.file_ticket(body.question, body.answer_given, body.reporter)
        return {"ticket_id": ticket.ticket_id}

    @app.get("/api/feedback", dependencies=[Depends(require_token)])
    def api_feedback_list(status: str | None = None):
        tickets = ticket_store.list(status)
        return [
            {**t.to_dict(), "allowed_transitions": [s.value for s in allowed_transitions(t.status)]}
            for t in tickets
        ]

    @app.post("/api/feedback/{ticket_id}/transition", dependencies=[Depends(require_token)])
    def api_feedback_transition(ticket_id: str, body: TransitionBody):
        ticket = ticket_store.transition(ticket_id, body.to, note=body.note, author=body.author)
        return {
            **ticket.to_dict(),
            "allowed_transitions": [s.value for s in allowed_transitions(ticket.status)],
        }

    @app.post("/api/reindex", dependencies=[Depends(require_token)])
    def api_reindex():
        return pipeline.reindex()

    @app.get("/api/config", dependencies=[Depends(require_token)])
    def api_config():
        redacted = _redact(config_to_dict(pipeline.config))
        redacted["version"] = pipeline.config_version
        return redacted

    @app.get("/api/health")
    def api_health():
        return {
            "status": "ok" if pipeline.chunk_count else "index_not_ready",
            "config_version": pipeline.config_version,
            "chunk_count": pipeline.chunk_count,
        }

    return app
