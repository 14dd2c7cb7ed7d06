"""HTTP service for interactive abbreviated typing.

Exposes session management, abbreviation expansion, word replacement, and
event-log ingestion under ``/v1``, backed by any predictor. Sessions hold
committed turns; expansion requests see at most the last
``max_context_turns`` turns. Event logs are summarized with the same
action accounting as the simulator.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .abbrev import AbbrevError, abbrev_from_wire
from .expand import AERequest, FMRequest, Predictor, PredictorError
from .simulate import ActionKind, COUNTED_KINDS, ksr

DEFAULT_CONTEXT_TURNS = 5
DEFAULT_K = 5

#: Event kinds that mark a candidate list being shown (not user actions).
AE_OPTIONS_SHOWN = "ae_options"
FM_OPTIONS_SHOWN = "fm_options"

_ACTION_KINDS = {kind.value for kind in ActionKind}
_COUNTED = {kind.value for kind in COUNTED_KINDS}


class ServiceError(ValueError):
    pass


@dataclass
class Session:
    id: str
    turns: list[dict] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)


class SessionStore:
    """In-memory session store with optional JSONL append persistence."""

    def __init__(self, persist_path: str | Path | None = None) -> None:
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._persist_path = Path(persist_path) if persist_path else None

    def create(self) -> Session:
        session = Session(id=uuid.uuid4().hex[:12])
        with self._lock:
            self._sessions[session.id] = session
        self._persist({"event": "session_created", "id": session.id})
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def commit_turn(self, session_id: str, text: str, speaker: int | None) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise KeyError(session_id)
            session.turns.append({"speaker": speaker, "text": text})
            session.updated = time.time()
        self._persist({"event": "turn", "id": session_id, "text": text, "speaker": speaker})
        return session

    def append_events(self, session_id: str, events: list[dict]) -> int:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise KeyError(session_id)
            last = session.events[-1]["t"] if session.events else None
            for event in events:
                if last is not None and event["t"] < last:
                    raise ServiceError(
                        f"event timestamps must be non-decreasing (got {event['t']} after {last})"
                    )
                last = event["t"]
            session.events.extend(events)
            session.updated = time.time()
            total = len(session.events)
        self._persist({"event": "log", "id": session_id, "events": events})
        return total

    def _persist(self, record: dict) -> None:
        if self._persist_path is None:
            return
        with self._lock:
            with self._persist_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def summarize_session(events: Sequence[Mapping]) -> dict:
    """Action accounting plus timing summaries for a session event log.

    N_a counts keystrokes and UI clicks, excluding the speak click; N_c is
    the character length of the spoken phrase (speak-event payload).
    Inter-keystroke intervals cover consecutive keystroke events only;
    option response times run from a candidate-list display event to the
    next selection click of the matching kind.
    """
    n_actions = 0
    n_chars: int | None = None
    keystroke_times: list[float] = []
    ae_shown: float | None = None
    fm_shown: float | None = None
    ae_rts: list[float] = []
    fm_rts: list[float] = []
    last_t: float | None = None
    for event in events:
        t = event["t"]
        if last_t is not None and t < last_t:
            raise ServiceError("event timestamps must be non-decreasing")
        last_t = t
        kind = event.get("kind")
        if kind in _COUNTED:
            n_actions += 1
        if kind == ActionKind.KEYSTROKE.value:
            keystroke_times.append(t)
        elif kind == AE_OPTIONS_SHOWN:
            ae_shown = t
        elif kind == FM_OPTIONS_SHOWN:
            fm_shown = t
        elif kind == ActionKind.CANDIDATE_CLICK.value and ae_shown is not None:
            ae_rts.append(t - ae_shown)
            ae_shown = None
        elif kind == ActionKind.WORD_OPTION_CLICK.value and fm_shown is not None:
            fm_rts.append(t - fm_shown)
            fm_shown = None
        if kind == ActionKind.SPEAK_CLICK.value:
            payload = event.get("payload")
            if isinstance(payload, str) and payload:
                n_chars = len(payload)
    ikis = [b - a for a, b in zip(keystroke_times, keystroke_times[1:])]

    def mean(values: list[float]) -> float | None:
        return sum(values) / len(values) if values else None

    return {
        "n_actions": n_actions,
        "n_chars": n_chars,
        "ksr": ksr(n_actions, n_chars) if n_chars else None,
        "mean_iki": mean(ikis),
        "ae_option_response_times": ae_rts,
        "fm_option_response_times": fm_rts,
        "mean_ae_option_rt": mean(ae_rts),
        "mean_fm_option_rt": mean(fm_rts),
        "events": len(events),
    }


# ---------------------------------------------------------------------------
# request/response bodies


class TurnBody(BaseModel):
    text: str = Field(min_length=1)
    speaker: int | None = None


class WireToken(BaseModel):
    kind: str
    surface: str


class AeBody(BaseModel):
    session_id: str
    tokens: list[WireToken]
    k: int = DEFAULT_K


class FillMaskBody(BaseModel):
    session_id: str
    phrase_words: list[str]
    masked_index: int
    k: int = DEFAULT_K


class LogEvent(BaseModel):
    t: float
    kind: str
    payload: str | int | None = None


class LogBody(BaseModel):
    session_id: str
    events: list[LogEvent]


def create_app(
    predictor: Predictor,
    max_context_turns: int = DEFAULT_CONTEXT_TURNS,
    persist_path: str | Path | None = None,
    cors_origins: Sequence[str] = ("*",),
) -> FastAPI:
    app = FastAPI(title="abbrex", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(persist_path)
    app.state.store = store
    app.state.predictor = predictor

    def get_session(session_id: str) -> Session:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    def context_window(session: Session) -> tuple[str, ...]:
        texts = [t["text"] for t in session.turns]
        return tuple(texts[-max_context_turns:])

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/v1/session")
    def create_session() -> dict:
        session = store.create()
        return {"id": session.id}

    @app.get("/v1/session/{session_id}")
    def get_session_info(session_id: str) -> dict:
        session = get_session(session_id)
        return {
            "id": session.id,
            "turns": list(session.turns),
            "created": session.created,
            "updated": session.updated,
        }

    @app.post("/v1/session/{session_id}/turn")
    def commit_turn(session_id: str, body: TurnBody) -> dict:
        get_session(session_id)
        session = store.commit_turn(session_id, body.text, body.speaker)
        return {"id": session.id, "turns": len(session.turns)}

    @app.post("/v1/ae")
    def expand(body: AeBody) -> dict:
        session = get_session(body.session_id)
        if body.k < 1:
            raise HTTPException(status_code=400, detail="k must be >= 1")
        try:
            abbrev = abbrev_from_wire([t.model_dump() for t in body.tokens])
        except AbbrevError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        request = AERequest(context=context_window(session), abbrev=abbrev, k=body.k)
        try:
            candidates = predictor.keyword_ae(request)
        except PredictorError as exc:
            raise HTTPException(status_code=502, detail=f"backend failure: {exc}")
        return {"candidates": [{"text": c.text, "score": c.score} for c in candidates]}

    @app.post("/v1/fillmask")
    def fill_mask(body: FillMaskBody) -> dict:
        session = get_session(body.session_id)
        if body.k < 1:
            raise HTTPException(status_code=400, detail="k must be >= 1")
        if not body.phrase_words or not all(body.phrase_words):
            raise HTTPException(status_code=400, detail="phrase_words must be non-empty")
        if not 0 <= body.masked_index < len(body.phrase_words):
            raise HTTPException(
                status_code=400,
                detail=f"masked_index {body.masked_index} out of range",
            )
        word = body.phrase_words[body.masked_index]
        request = FMRequest(
            context=context_window(session),
            phrase_words=tuple(body.phrase_words),
            masked_index=body.masked_index,
            initial=word[0].lower(),  # derived server-side
            k=body.k,
        )
        try:
            options = predictor.fill_mask(request)
        except PredictorError as exc:
            raise HTTPException(status_code=502, detail=f"backend failure: {exc}")
        return {"candidates": [o.word for o in options]}

    @app.post("/v1/log")
    def post_log(body: LogBody) -> dict:
        get_session(body.session_id)
        events = []
        for i, event in enumerate(body.events):
            if event.kind not in _ACTION_KINDS and event.kind not in (
                AE_OPTIONS_SHOWN,
                FM_OPTIONS_SHOWN,
            ):
                raise HTTPException(
                    status_code=400, detail=f"unknown event kind at index {i}: {event.kind!r}"
                )
            events.append({"t": event.t, "kind": event.kind, "payload": event.payload})
        try:
            total = store.append_events(body.session_id, events)
        except ServiceError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        return {"events": total}

    @app.get("/v1/session/{session_id}/summary")
    def session_summary(session_id: str) -> dict:
        session = get_session(session_id)
        try:
            return summarize_session(session.events)
        except ServiceError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    return app
