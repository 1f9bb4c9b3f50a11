"""HTTP API over the human-evaluation store, consumed by the rater UI.

Endpoints:
  GET  /healthz
  GET  /rubric
  GET  /sessions/{sid}/next?rater=R
  POST /sessions/{sid}/ratings
  GET  /sessions/{sid}/report
"""

import threading

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .humaneval import (AlreadyRated, HumanEvalError, OutOfRange, RatingRecord,
                        RATING_RUBRIC, SessionStore, UnknownRater, UnknownSlot,
                        aggregate, next_item)


class RatingBody(BaseModel):
    rater_id: str
    sample_id: str
    display_slot: int
    correctness: int = Field(ge=1, le=5)
    completeness: int = Field(ge=1, le=5)
    readability: int = Field(ge=1, le=5)
    note: str = ""


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="blinded rating service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    sessions = {}
    lock = threading.Lock()

    def get_session(session_id: str):
        with lock:
            if session_id not in sessions:
                try:
                    sessions[session_id] = store.load(session_id)
                except KeyError:
                    raise HTTPException(status_code=404,
                                        detail=f"unknown session {session_id!r}")
            return sessions[session_id]

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/rubric")
    def rubric():
        return RATING_RUBRIC

    @app.get("/sessions/{session_id}/next")
    def next_blinded_item(session_id: str, rater: str = Query(...)):
        session = get_session(session_id)
        try:
            item = next_item(session, rater)
        except UnknownRater as exc:
            raise HTTPException(status_code=400, detail=f"unknown rater: {exc}")
        if item is None:
            return {"done": True}
        return {"done": False, "item": item.to_payload()}

    @app.post("/sessions/{session_id}/ratings", status_code=201)
    def post_rating(session_id: str, body: RatingBody):
        session = get_session(session_id)
        record = RatingRecord(
            session_id=session_id,
            rater_id=body.rater_id,
            sample_id=body.sample_id,
            display_slot=body.display_slot,
            correctness=body.correctness,
            completeness=body.completeness,
            readability=body.readability,
            note=body.note,
        )
        try:
            record = store.append_rating(session, record)
        except AlreadyRated as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except (OutOfRange, UnknownSlot, UnknownRater, HumanEvalError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"status": "recorded", "sample_id": record.sample_id,
                "display_slot": record.display_slot}

    @app.get("/sessions/{session_id}/report")
    def report(session_id: str):
        session = get_session(session_id)
        return aggregate(session).to_payload()

    return app
