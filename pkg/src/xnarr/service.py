"""REST surface over the session engine.

Endpoints mirror the session lifecycle one-to-one; every mutation is
persisted before the response returns, and requests that target the
same session are serialized by a per-session lock. Generation progress
is exposed by polling GET /sessions/{id} (status + attempt count).
"""

from __future__ import annotations

import threading
from collections import defaultdict
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import ProfileLockedError, SessionError
from .explanations import artifact_from_dict, validate_artifact
from .orchestrator import Engine, SessionState
from .preference import resolve_persona


class StartSessionRequest(BaseModel):
    artifact: dict
    persona: Any
    mode: str = "full"
    rag: bool | None = None
    user_id: str | None = None


class FeedbackRequest(BaseModel):
    text: str = Field(min_length=1)


def _narrative_payload(session: SessionState) -> dict | None:
    turn = session.latest_turn
    if turn is None:
        return None
    payload = turn.narrative.to_dict()
    payload["validated"] = turn.success
    return payload


def _session_payload(session: SessionState) -> dict:
    turn = session.latest_turn
    return {
        "session_id": session.session_id,
        "status": session.status,
        "mode": session.mode,
        "rag_enabled": session.rag_enabled,
        "persona": session.persona.name,
        "s": session.preference.as_dict(),
        "target": session.persona.target.as_dict(),
        "attempts": session.attempt_count,
        "turns": len(session.turn_log),
        "narrative": _narrative_payload(session),
        "report": turn.report.to_dict() if turn else None,
    }


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="xnarr", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, SessionState] = {}
    locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    def get_session(session_id: str) -> SessionState:
        if session_id in sessions:
            return sessions[session_id]
        try:
            session = engine.load_session(session_id)
        except FileNotFoundError:
            raise HTTPException(status_code=404, detail="unknown session") from None
        sessions[session_id] = session
        return session

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/sessions")
    def start_session(body: StartSessionRequest) -> JSONResponse:
        try:
            artifact = artifact_from_dict(body.artifact)
        except (KeyError, TypeError, ValueError) as exc:
            return JSONResponse(status_code=422, content={"violations": [str(exc)]})
        check = validate_artifact(artifact)
        if not check.ok:
            return JSONResponse(status_code=422, content={"violations": check.violations})
        try:
            persona = resolve_persona(body.persona)
        except (ValueError, TypeError, KeyError) as exc:
            return JSONResponse(status_code=422, content={"violations": [str(exc)]})
        if body.mode not in ("full", "single_pass"):
            return JSONResponse(
                status_code=422, content={"violations": [f"unknown mode {body.mode!r}"]}
            )
        session = engine.start_session(
            artifact, persona, mode=body.mode, rag_enabled=body.rag, user_id=body.user_id
        )
        sessions[session.session_id] = session
        return JSONResponse(content=_session_payload(session))

    @app.get("/sessions/{session_id}")
    def read_session(session_id: str) -> dict:
        return _session_payload(get_session(session_id))

    @app.post("/sessions/{session_id}/feedback")
    def feedback(session_id: str, body: FeedbackRequest) -> dict:
        session = get_session(session_id)
        with locks[session_id]:
            try:
                engine.run_turn(session, body.text)
            except ProfileLockedError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except SessionError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _session_payload(session)

    @app.post("/sessions/{session_id}/confirm")
    def confirm(session_id: str) -> dict:
        session = get_session(session_id)
        with locks[session_id]:
            try:
                profile = engine.confirm(session)
            except SessionError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"profile": profile, "status": session.status}

    @app.get("/sessions/{session_id}/history")
    def history(session_id: str) -> dict:
        session = get_session(session_id)
        return {
            "session_id": session.session_id,
            "turns": [turn.to_dict() for turn in session.turn_log],
            "feedback_history": [event.to_dict() for event in session.feedback_history],
        }

    return app


def serve(engine: Engine, host: str = "127.0.0.1", port: int = 8077) -> None:
    import uvicorn

    uvicorn.run(create_app(engine), host=host, port=port)
