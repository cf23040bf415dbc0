"""HTTP API for annotation sessions; serves the optional static frontend."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .humaneval import (
    Judgment,
    NotFound,
    Session,
    ValidationError,
    aggregate,
    export_judgments,
    save_session,
)


class JudgmentIn(BaseModel):
    item_id: str
    naturalness: str
    label_agree: str
    origin_guess: str
    correction: str | None = None
    comment: str | None = None


class SessionStore:
    """In-memory session registry, flushed to disk after every write."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.sessions: dict[str, Session] = {}

    def add(self, session: Session) -> None:
        self.sessions[session.session_id] = session
        save_session(session, self.root / session.session_id)

    def get(self, session_id: str) -> Session:
        if session_id not in self.sessions:
            raise HTTPException(status_code=404, detail="unknown session")
        return self.sessions[session_id]

    def flush(self, session: Session) -> None:
        save_session(session, self.root / session.session_id)


def _resolve_annotator(session: Session, token: str) -> str:
    for annotator, ann_token in session.annotator_tokens.items():
        if ann_token == token:
            return annotator
    raise HTTPException(status_code=403, detail="invalid annotator token")


def create_app(store: SessionStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="cmaug human evaluation")

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str, annotator: str = Query(...)):
        session = store.get(session_id)
        annotator_id = _resolve_annotator(session, annotator)
        item = session.next_item(annotator_id)
        progress = session.progress(annotator_id)
        if item is None:
            return {"done": True, "item": None, "progress": progress}
        return {"done": False, "item": item.public_view(), "progress": progress}

    @app.post("/sessions/{session_id}/judgments")
    def submit(session_id: str, body: JudgmentIn, annotator: str = Query(...)):
        session = store.get(session_id)
        annotator_id = _resolve_annotator(session, annotator)
        judgment = Judgment(
            item_id=body.item_id,
            annotator_id=annotator_id,
            naturalness=body.naturalness,
            label_agree=body.label_agree,
            origin_guess=body.origin_guess,
            correction=body.correction,
            comment=body.comment,
        )
        try:
            session.submit(annotator_id, judgment)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        store.flush(session)
        return {"accepted": True, "progress": session.progress(annotator_id)}

    @app.get("/sessions/{session_id}/report")
    def report(session_id: str, x_admin_token: str = Header(default="")):
        session = store.get(session_id)
        if x_admin_token != session.admin_token:
            raise HTTPException(status_code=403, detail="admin token required")
        try:
            return aggregate(session).to_dict()
        except ValueError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, x_admin_token: str = Header(default="")):
        session = store.get(session_id)
        if x_admin_token != session.admin_token:
            raise HTTPException(status_code=403, detail="admin token required")
        return {"judgments": list(export_judgments(session))}

    if static_dir is not None and Path(static_dir).is_dir():
        static_dir = Path(static_dir)

        @app.get("/")
        def index():
            return FileResponse(static_dir / "index.html")

        app.mount("/static", StaticFiles(directory=static_dir), name="static")

    return app
